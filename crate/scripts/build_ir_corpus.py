#!/usr/bin/env python3
"""Writes the three-format IR corpus used by the parser equivalence tests.

Each entry is one call list rendered as a JSON AST, an XML AST and a direct
call list. The renderers here are independent of the Rust serializers.

    python3 scripts/build_ir_corpus.py
"""

import json
from pathlib import Path
from xml.sax.saxutils import escape

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data" / "ir_corpus.json"


def ref(k):
    return ("ref", k)


CORPUS = [
    ("no_call", []),
    ("single_no_args", [("Get_current_location", {})]),
    ("single_string", [("Find_Restaurants_by_Location", {"location": "San Diego"})]),
    ("chain_two", [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)})]),
    ("funnel", [("Get_current_time", {}), ("Get_current_location", {}),
                ("Get_weather", {"time": ref(0), "location": ref(1)})]),
    ("tree", [("Get_Crypto_Price", {"ticker": "BTC", "price_time": "2026-01-11"}),
              ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "GBP",
                                           "price_time": "2026-01-11"}),
              ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "EUR",
                                           "price_time": "2026-01-11"})]),
    ("float_arg", [("Find_Restaurants_by_Location", {"location": "LA"}),
                   ("Filter_Restaurants_by_ratings", {"restaurants": ref(0), "ratings": 4.2})]),
    ("integer_arg", [("Get_Car_Listing_by_Dealerships", {"dealerships": "Harbor Motors", "limit": 3})]),
    ("negative_numbers", [("Shift", {"dx": -7, "dy": -0.125})]),
    ("exponent_float", [("Scale", {"factor": 1.5e-07, "big": 3e+20})]),
    ("booleans", [("Toggle", {"on": True, "verbose": False})]),
    ("numeric_looking_string", [("Lookup", {"code": "007", "zip": "92101"})]),
    ("string_with_quotes", [("Say", {"text": 'He said "hi" and left'})]),
    ("string_with_markup", [("Say", {"text": "a < b && c > d"})]),
    ("unicode_string", [("Translate_Text", {"text": "café — 東京", "target_language": "ja"})]),
    ("empty_string", [("Search", {"query": ""})]),
    ("many_params", [("Book", {"origin": "SAN", "destination": "BOS", "seats": 2, "refundable": False,
                               "max_price": 450.5})]),
    ("reference_reused", [("A", {}), ("B", {"x": ref(0)}), ("C", {"x": ref(0), "y": ref(1)})]),
    ("dotted_name", [("weather.current", {"city": "Paris"})]),
    ("mixed_depth_five", [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)}),
                          ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(1), "cuisine": "Mexican"}),
                          ("Get_current_time", {}),
                          ("Filter_Restaurants_by_Opening_Hours", {"restaurants": ref(2), "time": ref(3)})]),
]


def lit(v):
    return f"API_RESPONSE_{v[1]}" if isinstance(v, tuple) else v


def to_json(calls):
    return json.dumps({str(i): {t: {k: lit(v) for k, v in a.items()}} for i, (t, a) in enumerate(calls)},
                      indent=2, ensure_ascii=False)


def xml_scalar(v):
    if isinstance(v, bool):
        return "boolean", "true" if v else "false"
    if isinstance(v, int):
        return "integer", str(v)
    if isinstance(v, float):
        return "float", repr(v)
    return "string", escape(v)


def to_xml(calls):
    out = []
    for i, (tool, args) in enumerate(calls):
        out.append(f'<api id="{i}">\n  <name>{escape(tool)}</name>')
        for k, v in args.items():
            if isinstance(v, tuple):
                out.append(f'  <param name="{k}"><response api_id="{v[1]}"/></param>')
            else:
                ty, text = xml_scalar(v)
                out.append(f'  <param name="{k}" type="{ty}">{text}</param>')
        out.append("</api>")
    return "\n".join(out)


def direct_value(v):
    if isinstance(v, tuple):
        return f"API_RESPONSE_{v[1]}"
    if isinstance(v, bool):
        return "True" if v else "False"
    if isinstance(v, float):
        return repr(v)
    return json.dumps(v, ensure_ascii=False)


def to_direct(calls):
    return "[" + ", ".join(
        f"{t}({', '.join(f'{k}={direct_value(v)}' for k, v in a.items())})" for t, a in calls) + "]"


def main():
    assert len(CORPUS) == 20
    entries = [{"name": n, "json": to_json(c), "xml": to_xml(c), "direct": to_direct(c)} for n, c in CORPUS]
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(entries, indent=2, ensure_ascii=False) + "\n")
    print(f"wrote {len(entries)} entries to {OUT}")


if __name__ == "__main__":
    main()
