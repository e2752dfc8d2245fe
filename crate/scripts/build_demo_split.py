#!/usr/bin/env python3
"""Regenerates the demo benchmark split and its gold rollouts.

Gold answers are computed here from the fixture tables, independently of the
Rust backend, so the end-to-end tests compare two implementations.

    python3 scripts/build_demo_split.py
"""

import json
import math
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "crates" / "core" / "data"
FX = json.loads((DATA / "fixtures.json").read_text())


def ref(k):
    return ("ref", k)


# --- fixture tools ---------------------------------------------------------

def hhmm(s):
    h, m = s.split(" ")[-1].split(":")
    return int(h) * 60 + int(m)


def is_open(r, t):
    o, c = hhmm(r["hours"]["open"]), hhmm(r["hours"]["close"])
    return o <= t < c if o < c else (t >= o or t < c)


def cents(x):
    return math.floor(x * 100 + 0.5) / 100


def run_tool(name, a):
    if name == "Get_current_location":
        return FX["current_location"]
    if name in ("Get_current_time", "GetTime"):
        return FX["current_time"]
    if name == "Get_weather":
        [w] = [w for w in FX["weather"] if w["time"] == a["time"] and w["location"] == a["location"]]
        return w["report"]
    if name == "Find_Restaurants_by_Location":
        return [r for r in FX["restaurants"] if r["location"] == a["location"]]
    if name == "Filter_Restaurants_by_Cuisine":
        return [r for r in a["restaurants"] if r["cuisine"].lower() == a["cuisine"].lower()]
    if name == "Filter_Restaurants_by_ratings":
        return [r for r in a["restaurants"] if r["rating"] >= a["ratings"]]
    if name == "Filter_Restaurants_by_Opening_Hours":
        t = hhmm(a["time"])
        return [r for r in a["restaurants"] if is_open(r, t)]
    if name == "Get_Crypto_Price":
        [p] = [p for p in FX["crypto_prices"] if p["ticker"] == a["ticker"] and p["date"] == a["price_time"]]
        return p["usd"]
    if name == "Currency_conversion_API":
        [r] = [r for r in FX["fx_rates"]
               if (r["from"], r["to"], r["date"]) == (a["from_currency"], a["to_currency"], a["price_time"])]
        return cents(a["amount"] * r["rate"])
    if name == "Find_Dealerships_by_Location":
        return [d for d in FX["dealerships"] if d["location"] == a["location"]]
    if name == "Get_Car_Listing_by_Dealerships":
        names = [d["name"] if isinstance(d, dict) else d for d in a["dealerships"]]
        return [c for c in FX["car_listings"] if c["dealership"] in names][: a.get("limit", 20)]
    raise KeyError(name)


def run(calls, mode):
    outs = []
    for tool, args in calls:
        resolved = {k: outs[v[1]] if isinstance(v, tuple) else v for k, v in args.items()}
        outs.append(run_tool(tool, resolved))
    return outs if mode == "all" else outs[-1]


# --- payload writers -------------------------------------------------------

def lit(v):
    return f"API_RESPONSE_{v[1]}" if isinstance(v, tuple) else v


def to_json(calls):
    return json.dumps({str(i): {t: {k: lit(v) for k, v in a.items()}} for i, (t, a) in enumerate(calls)}, indent=2)


def xml_type(v):
    return {bool: "boolean", int: "integer", float: "float", str: "string"}[type(v)]


def to_xml(calls):
    blocks = []
    for i, (tool, args) in enumerate(calls):
        lines = [f'<api id="{i}">', f"    <name>{tool}</name>"]
        for k, v in args.items():
            if isinstance(v, tuple):
                lines += [f'    <param name="{k}">',
                          f'        <response api_id="{v[1]}" api_name="{calls[v[1]][0]}" type="placeholder"/>',
                          "    </param>"]
            else:
                lines.append(f'    <param name="{k}" type="{xml_type(v)}">{v}</param>')
        lines.append("</api>")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def to_direct(calls):
    def val(v):
        if isinstance(v, tuple):
            return f"API_RESPONSE_{v[1]}"
        if isinstance(v, bool):
            return "True" if v else "False"
        return json.dumps(v)

    return "[" + ", ".join(f"{t}({', '.join(f'{k}={val(v)}' for k, v in a.items())})" for t, a in calls) + "]"


WRITERS = {"json": to_json, "xml": to_xml, "direct": to_direct}


def response(calls, mode, fmt, thought):
    payload = WRITERS[fmt](calls) if calls else "{}"
    return f'<think>{thought}</think>\n<tool_call return="{mode}">\n{payload}\n</tool_call>'


# --- items -----------------------------------------------------------------

D = "2026-01-11"
NOW = FX["current_time"]

ITEMS = [
    # (id, query, structure, calls, mode, distractors)
    ("d0-flight", "Book me a flight from San Diego to Boston next Friday.", "none", [], "one",
     ["Get_current_location", "Find_Hotels_by_Location", "Get_current_date"]),
    ("d0-translate", "Translate 'good morning' into French.", "none", [], "one",
     ["Get_weather", "Get_Crypto_Price", "Get_current_time"]),
    ("d0-stock", "What is ACME stock trading at today?", "none", [], "one",
     ["Get_Crypto_Price", "Currency_conversion_API", "Get_current_date"]),
    ("d0-email", "Email my landlord that the rent is paid.", "none", [], "one",
     ["Get_current_location", "Find_Restaurants_by_Location"]),

    ("d1-where", "Where am I right now?", "single",
     [("Get_current_location", {})], "one", ["GetTime", "Get_air_quality"]),
    ("d1-time", "What time is it?", "single",
     [("Get_current_time", {})], "one", ["Get_current_date", "Get_current_location"]),
    ("d1-morning-weather", "What was the weather in San Diego at 8am on Jan 11, 2026?", "single",
     [("Get_weather", {"time": "2026-01-11 08:00", "location": "San Diego"})], "one",
     ["Get_air_quality", "Get_current_time"]),
    ("d1-eth", "What was Ethereum worth in USD on 2026-01-11?", "single",
     [("Get_Crypto_Price", {"ticker": "ETH", "price_time": D})], "one",
     ["Get_Stock_Price", "Get_Exchange_Rate"]),
    ("d1-yen", "Convert 100 US dollars to yen at the 2026-01-11 rate.", "single",
     [("Currency_conversion_API", {"amount": 100, "from_currency": "USD", "to_currency": "JPY", "price_time": D})],
     "one", ["Get_Exchange_Rate", "Get_Crypto_Price"]),
    ("d1-la-food", "List restaurants in Los Angeles.", "single",
     [("Find_Restaurants_by_Location", {"location": "Los Angeles"})], "one",
     ["Find_Hotels_by_Location", "Find_Gas_Stations_by_Location"]),

    ("d2-food-near", "Find restaurants near me.", "chain",
     [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)})], "one",
     ["Find_Hotels_by_Location", "Get_current_time"]),
    ("d2-dealers-near", "Which car dealerships are near me?", "chain",
     [("Get_current_location", {}), ("Find_Dealerships_by_Location", {"location": ref(0)})], "one",
     ["Find_Gas_Stations_by_Location", "Get_Car_Listing_by_Dealerships"]),
    ("d2-btc-eur", "What was bitcoin worth in euros on 2026-01-11?", "chain",
     [("Get_Crypto_Price", {"ticker": "BTC", "price_time": D}),
      ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "EUR", "price_time": D})],
     "one", ["Get_Exchange_Rate", "Get_Stock_Price"]),
    ("d2-la-mexican", "Show me Mexican restaurants in Los Angeles.", "chain",
     [("Find_Restaurants_by_Location", {"location": "Los Angeles"}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(0), "cuisine": "Mexican"})], "one",
     ["Filter_Restaurants_by_ratings", "Find_Hotels_by_Location"]),
    ("d2-first-car", "Show me the first car listed by San Diego dealerships.", "chain",
     [("Find_Dealerships_by_Location", {"location": "San Diego"}),
      ("Get_Car_Listing_by_Dealerships", {"dealerships": ref(0), "limit": 1})], "one",
     ["Get_current_location", "Find_Gas_Stations_by_Location"]),

    ("d3-car-listings", "Get all car listings from nearby dealerships.", "chain",
     [("Get_current_location", {}), ("Find_Dealerships_by_Location", {"location": ref(0)}),
      ("Get_Car_Listing_by_Dealerships", {"dealerships": ref(1)})], "one",
     ["Find_Gas_Stations_by_Location", "Find_Hotels_by_Location"]),
    ("d3-weather-now", "What is the current weather?", "funnel",
     [("Get_current_time", {}), ("Get_current_location", {}),
      ("Get_weather", {"time": ref(0), "location": ref(1)})], "one",
     ["Get_air_quality", "Get_current_date"]),
    ("d3-btc-gbp-eur", "What is the price of bitcoin on Jan, 11, 2026. Give me its value in British pounds, and in Euros?",
     "tree",
     [("Get_Crypto_Price", {"ticker": "BTC", "price_time": D}),
      ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "GBP", "price_time": D}),
      ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "EUR", "price_time": D})],
     "all", ["Get_Exchange_Rate", "Get_Stock_Price"]),
    ("d3-japanese-sd", "Show me Japanese restaurants in San Diego that have ratings above 4.2.", "conjunctive",
     [("Find_Restaurants_by_Location", {"location": "San Diego"}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(0), "cuisine": "Japanese"}),
      ("Filter_Restaurants_by_ratings", {"restaurants": ref(1), "ratings": 4.2})], "one",
     ["Filter_Hotels_by_ratings", "Filter_Restaurants_by_Opening_Hours"]),
    ("d3-french-near", "Find French restaurants near me.", "chain",
     [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(1), "cuisine": "French"})], "one",
     ["Filter_Restaurants_by_ratings", "Find_Hotels_by_Location"]),

    ("d4-top-japanese", "Find Japanese restaurants near me rated 4.5 or better.", "chain",
     [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(1), "cuisine": "Japanese"}),
      ("Filter_Restaurants_by_ratings", {"restaurants": ref(2), "ratings": 4.5})], "one",
     ["Filter_Hotels_by_ratings", "Get_current_time"]),
    ("d4-mexican-dinner",
     "Which Mexican restaurants in San Diego rated at least 4.0 are open at 7:30pm on Jan 11, 2026?", "conjunctive",
     [("Find_Restaurants_by_Location", {"location": "San Diego"}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(0), "cuisine": "Mexican"}),
      ("Filter_Restaurants_by_ratings", {"restaurants": ref(1), "ratings": 4.0}),
      ("Filter_Restaurants_by_Opening_Hours", {"restaurants": ref(2), "time": NOW})], "one",
     ["Get_current_time", "Filter_Hotels_by_ratings"]),
    ("d4-btc-three", "What was bitcoin worth on 2026-01-11 in pounds, euros and yen?", "tree",
     [("Get_Crypto_Price", {"ticker": "BTC", "price_time": D}),
      ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "GBP", "price_time": D}),
      ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "EUR", "price_time": D}),
      ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "JPY", "price_time": D})],
     "all", ["Get_Exchange_Rate", "Get_Stock_Price"]),
    ("d4-open-now", "Which restaurants near me are open right now?", "mixed",
     [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)}),
      ("Get_current_time", {}),
      ("Filter_Restaurants_by_Opening_Hours", {"restaurants": ref(1), "time": ref(2)})], "one",
     ["Get_current_date", "Filter_Restaurants_by_ratings"]),

    ("d5-mexican-open", "Could you find Mexican restaurants near me that are open right now?", "mixed",
     [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(1), "cuisine": "Mexican"}),
      ("Get_current_time", {}),
      ("Filter_Restaurants_by_Opening_Hours", {"restaurants": ref(2), "time": ref(3)})], "one",
     ["Filter_Restaurants_by_ratings", "Find_Hotels_by_Location"]),
    ("d5-french-open", "Is there a French place near me that is open now?", "mixed",
     [("GetTime", {}), ("Get_current_location", {}),
      ("Find_Restaurants_by_Location", {"location": ref(1)}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(2), "cuisine": "French"}),
      ("Filter_Restaurants_by_Opening_Hours", {"restaurants": ref(3), "time": ref(0)})], "one",
     ["Get_current_date", "Filter_Hotels_by_ratings"]),
    ("d5-japanese-dinner",
     "Which Japanese restaurants near me rated at least 4.2 are open at 7:30pm on Jan 11, 2026?", "conjunctive",
     [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(1), "cuisine": "Japanese"}),
      ("Filter_Restaurants_by_ratings", {"restaurants": ref(2), "ratings": 4.2}),
      ("Filter_Restaurants_by_Opening_Hours", {"restaurants": ref(3), "time": NOW})], "one",
     ["Get_current_time", "Find_Hotels_by_Location"]),
    ("d5-btc-two-days",
     "Give me bitcoin's value in pounds and euros on 2026-01-11, and in pounds on 2026-01-10.", "mixed",
     [("Get_Crypto_Price", {"ticker": "BTC", "price_time": D}),
      ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "GBP", "price_time": D}),
      ("Currency_conversion_API", {"amount": ref(0), "from_currency": "USD", "to_currency": "EUR", "price_time": D}),
      ("Get_Crypto_Price", {"ticker": "BTC", "price_time": "2026-01-10"}),
      ("Currency_conversion_API",
       {"amount": ref(3), "from_currency": "USD", "to_currency": "GBP", "price_time": "2026-01-10"})],
     "all", ["Get_Exchange_Rate", "Get_Stock_Price"]),

    ("d6-japanese-open", "Find Japanese restaurants near me rated 4.0 or higher that are open now.", "mixed",
     [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(1), "cuisine": "Japanese"}),
      ("Filter_Restaurants_by_ratings", {"restaurants": ref(2), "ratings": 4.0}),
      ("Get_current_time", {}),
      ("Filter_Restaurants_by_Opening_Hours", {"restaurants": ref(3), "time": ref(4)})], "one",
     ["Filter_Hotels_by_ratings", "Get_current_date"]),
    ("d6-mexican-open", "Any Mexican restaurant near me rated above 4.3 that's open right now?", "mixed",
     [("Get_current_time", {}), ("Get_current_location", {}),
      ("Find_Restaurants_by_Location", {"location": ref(1)}),
      ("Filter_Restaurants_by_ratings", {"restaurants": ref(2), "ratings": 4.3}),
      ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(3), "cuisine": "Mexican"}),
      ("Filter_Restaurants_by_Opening_Hours", {"restaurants": ref(4), "time": ref(0)})], "one",
     ["Find_Hotels_by_Location", "Get_air_quality"]),
    ("d6-evening-plan",
     "I'm planning dinner: show me highly rated (4.5+) places near me, which are open now, and the weather.", "mixed",
     [("Get_current_location", {}), ("Find_Restaurants_by_Location", {"location": ref(0)}),
      ("Filter_Restaurants_by_ratings", {"restaurants": ref(1), "ratings": 4.5}),
      ("Get_current_time", {}),
      ("Filter_Restaurants_by_Opening_Hours", {"restaurants": ref(2), "time": ref(3)}),
      ("Get_weather", {"time": ref(3), "location": ref(0)})], "all",
     ["Get_air_quality", "Filter_Hotels_by_ratings"]),
]

# Commuted filter order for the conjunctive restaurant query.
ALTERNATIVES = {
    "d3-japanese-sd": [("Find_Restaurants_by_Location", {"location": "San Diego"}),
                       ("Filter_Restaurants_by_ratings", {"restaurants": ref(0), "ratings": 4.2}),
                       ("Filter_Restaurants_by_Cuisine", {"restaurants": ref(1), "cuisine": "Japanese"})],
}


def targets(calls):
    seen = []
    for tool, _ in calls:
        if tool not in seen:
            seen.append(tool)
    return seen


def main():
    formats = ["json", "xml", "direct"]
    items, rollouts, alts = [], [], []
    for n, (iid, query, structure, calls, mode, distractors) in enumerate(ITEMS):
        depth = len(calls)
        gold = {"no_call": True} if not calls else {"answer": run(calls, mode)}
        item = {"id": iid, "query": query, "depth": depth, "structure": structure,
                "tool_names": targets(calls) + distractors, "gold": gold, "return_mode": mode}
        if calls:
            item["gold_trajectory"] = json.dumps(json.loads(to_json(calls)), separators=(",", ":"))
        items.append(item)
        fmt = formats[n % 3]
        rollouts.append({"item_id": iid, "response_text": response(calls, mode, fmt, f"Answering with {fmt} calls.")})
        if iid in ALTERNATIVES:
            alt = ALTERNATIVES[iid]
            assert run(alt, mode) == gold["answer"], "alternative must reach the same answer"
            alts.append({"item_id": iid, "response_text": response(alt, mode, "json", "Filter by rating first.")})

    def dump(name, rows):
        (DATA / name).write_text("".join(json.dumps(r) + "\n" for r in rows))

    dump("demo_split.jsonl", items)
    dump("demo_gold_rollouts.jsonl", rollouts)
    dump("demo_alternative_rollouts.jsonl", alts)
    print(f"{len(items)} items, depths {sorted({i['depth'] for i in items})}")


if __name__ == "__main__":
    main()
