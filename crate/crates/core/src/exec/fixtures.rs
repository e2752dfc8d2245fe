use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{check_invocation, ToolBackend, ToolError};
use crate::schema::{load_registry, Dialect, ToolRegistry};

const BUILTIN_FIXTURES: &str = include_str!("../../data/fixtures.json");
const BUILTIN_TOOLS: &str = include_str!("../../data/tools.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherRow {
    pub time: String,
    pub location: String,
    pub report: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hours {
    pub open: String,
    pub close: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restaurant {
    pub name: String,
    pub location: String,
    pub cuisine: String,
    pub rating: f64,
    pub hours: Hours,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CryptoPrice {
    pub ticker: String,
    pub date: String,
    pub usd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FxRate {
    pub from: String,
    pub to: String,
    pub date: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dealership {
    pub name: String,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarListing {
    pub dealership: String,
    pub make: String,
    pub model: String,
    pub year: i64,
    pub price: f64,
}

/// Keyed tables behind the fixture backend. Every value a fixture tool can
/// return comes from here; nothing reads the clock or the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixtures {
    pub version: u32,
    pub current_location: String,
    pub current_time: String,
    pub weather: Vec<WeatherRow>,
    pub restaurants: Vec<Restaurant>,
    pub crypto_prices: Vec<CryptoPrice>,
    pub fx_rates: Vec<FxRate>,
    pub dealerships: Vec<Dealership>,
    pub car_listings: Vec<CarListing>,
}

impl Fixtures {
    /// The tables shipped with the crate.
    pub fn builtin() -> Fixtures {
        serde_json::from_str(BUILTIN_FIXTURES).expect("shipped fixtures parse")
    }

    pub fn from_json(source: &str) -> Result<Fixtures, serde_json::Error> {
        serde_json::from_str(source)
    }

    /// Schemas of the fixture tools plus a handful of unimplemented distractors.
    pub fn builtin_registry() -> ToolRegistry {
        load_registry(BUILTIN_TOOLS, Dialect::Native).expect("shipped tool registry loads")
    }
}

#[derive(Debug, Clone)]
pub struct FixtureBackend {
    fixtures: Fixtures,
    registry: ToolRegistry,
}

pub fn fixture_backend(fixtures: Fixtures) -> FixtureBackend {
    FixtureBackend {
        fixtures,
        registry: Fixtures::builtin_registry(),
    }
}

impl FixtureBackend {
    pub fn registry(&self) -> &ToolRegistry {
        &self.registry
    }
}

fn str_arg<'a>(args: &'a Map<String, Value>, name: &str) -> Result<&'a str, ToolError> {
    args.get(name)
        .and_then(Value::as_str)
        .ok_or_else(|| ToolError::rejected(format!("`{name}` must be a string")))
}

fn num_arg(args: &Map<String, Value>, name: &str) -> Result<f64, ToolError> {
    args.get(name)
        .and_then(Value::as_f64)
        .ok_or_else(|| ToolError::rejected(format!("`{name}` must be a number")))
}

fn array_arg<'a>(args: &'a Map<String, Value>, name: &str) -> Result<&'a Vec<Value>, ToolError> {
    args.get(name)
        .and_then(Value::as_array)
        .ok_or_else(|| ToolError::rejected(format!("`{name}` must be an array")))
}

/// Minutes since midnight from `HH:MM`, or from the trailing `HH:MM` of a
/// `YYYY-MM-DD HH:MM` timestamp.
fn minutes(s: &str) -> Option<u32> {
    let s = s.trim();
    let tail = s.rsplit(' ').next()?;
    let (h, m) = tail.split_once(':')?;
    let (h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
    (h < 24 && m < 60).then_some(h * 60 + m)
}

/// Filters a restaurant collection element-wise; the input order is kept.
fn filter_restaurants(
    items: &[Value],
    mut keep: impl FnMut(&Map<String, Value>) -> Result<bool, ToolError>,
) -> Result<Value, ToolError> {
    let mut out = Vec::new();
    for item in items {
        let record = item
            .as_object()
            .ok_or_else(|| ToolError::rejected("restaurants must be records"))?;
        if keep(record)? {
            out.push(item.clone());
        }
    }
    Ok(Value::Array(out))
}

fn field<'a>(record: &'a Map<String, Value>, name: &str) -> Result<&'a Value, ToolError> {
    record
        .get(name)
        .ok_or_else(|| ToolError::rejected(format!("restaurant record lacks `{name}`")))
}

fn round_cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

impl FixtureBackend {
    fn dispatch(&self, tool: &str, args: &Map<String, Value>) -> Result<Value, ToolError> {
        let fx = &self.fixtures;
        match tool {
            "Get_current_location" => Ok(json!(fx.current_location)),
            "Get_current_time" | "GetTime" => Ok(json!(fx.current_time)),
            "Get_weather" => {
                let (time, location) = (str_arg(args, "time")?, str_arg(args, "location")?);
                fx.weather
                    .iter()
                    .find(|w| w.time == time && w.location == location)
                    .map(|w| json!(w.report))
                    .ok_or_else(|| ToolError::fault(format!("no weather for {location} at {time}")))
            }
            "Find_Restaurants_by_Location" => {
                let location = str_arg(args, "location")?;
                let found: Vec<&Restaurant> =
                    fx.restaurants.iter().filter(|r| r.location == location).collect();
                if found.is_empty() {
                    return Err(ToolError::fault(format!("no restaurant table for {location}")));
                }
                Ok(json!(found))
            }
            "Filter_Restaurants_by_Cuisine" => {
                let cuisine = str_arg(args, "cuisine")?;
                filter_restaurants(array_arg(args, "restaurants")?, |r| {
                    Ok(field(r, "cuisine")?
                        .as_str()
                        .is_some_and(|c| c.eq_ignore_ascii_case(cuisine)))
                })
            }
            "Filter_Restaurants_by_ratings" => {
                let min = num_arg(args, "ratings")?;
                filter_restaurants(array_arg(args, "restaurants")?, |r| {
                    Ok(field(r, "rating")?.as_f64().is_some_and(|v| v >= min))
                })
            }
            "Filter_Restaurants_by_Opening_Hours" => {
                let raw = str_arg(args, "time")?;
                let at = minutes(raw).ok_or_else(|| ToolError::rejected(format!("unreadable time `{raw}`")))?;
                filter_restaurants(array_arg(args, "restaurants")?, |r| {
                    let hours = field(r, "hours")?;
                    let bound = |k: &str| {
                        hours
                            .get(k)
                            .and_then(Value::as_str)
                            .and_then(minutes)
                            .ok_or_else(|| ToolError::rejected("restaurant hours unreadable"))
                    };
                    let (open, close) = (bound("open")?, bound("close")?);
                    // A close at or before the open time means the kitchen runs past midnight.
                    Ok(if open < close {
                        open <= at && at < close
                    } else {
                        at >= open || at < close
                    })
                })
            }
            "Get_Crypto_Price" => {
                let (ticker, date) = (str_arg(args, "ticker")?, str_arg(args, "price_time")?);
                fx.crypto_prices
                    .iter()
                    .find(|p| p.ticker.eq_ignore_ascii_case(ticker) && p.date == date)
                    .map(|p| json!(p.usd))
                    .ok_or_else(|| ToolError::fault(format!("no {ticker} price on {date}")))
            }
            "Currency_conversion_API" => {
                let amount = num_arg(args, "amount")?;
                let from = str_arg(args, "from_currency")?;
                let to = str_arg(args, "to_currency")?;
                let date = str_arg(args, "price_time")?;
                if from.eq_ignore_ascii_case(to) {
                    return Ok(json!(amount));
                }
                fx.fx_rates
                    .iter()
                    .find(|r| r.from.eq_ignore_ascii_case(from) && r.to.eq_ignore_ascii_case(to) && r.date == date)
                    .map(|r| json!(round_cents(amount * r.rate)))
                    .ok_or_else(|| ToolError::fault(format!("no {from}->{to} rate on {date}")))
            }
            "Find_Dealerships_by_Location" => {
                let location = str_arg(args, "location")?;
                let found: Vec<&Dealership> =
                    fx.dealerships.iter().filter(|d| d.location == location).collect();
                if found.is_empty() {
                    return Err(ToolError::fault(format!("no dealership table for {location}")));
                }
                Ok(json!(found))
            }
            "Get_Car_Listing_by_Dealerships" => {
                let limit = match args.get("limit") {
                    Some(v) => v.as_u64().ok_or_else(|| ToolError::rejected("`limit` must be non-negative"))? as usize,
                    None => 20,
                };
                let mut names = Vec::new();
                for d in array_arg(args, "dealerships")? {
                    let name = d
                        .as_str()
                        .or_else(|| d.get("name").and_then(Value::as_str))
                        .ok_or_else(|| ToolError::rejected("dealerships must be names or records with a name"))?;
                    if !fx.dealerships.iter().any(|x| x.name == name) {
                        return Err(ToolError::fault(format!("unknown dealership {name}")));
                    }
                    names.push(name);
                }
                let listings: Vec<&CarListing> = fx
                    .car_listings
                    .iter()
                    .filter(|c| names.contains(&c.dealership.as_str()))
                    .take(limit)
                    .collect();
                Ok(json!(listings))
            }
            _ => Err(ToolError::unknown_tool(tool)),
        }
    }
}

impl ToolBackend for FixtureBackend {
    fn invoke(&self, tool: &str, args: &Map<String, Value>) -> Result<Value, ToolError> {
        let schema = self
            .registry
            .lookup(tool)
            .ok_or_else(|| ToolError::unknown_tool(tool))?;
        check_invocation(schema, args)?;
        self.dispatch(tool, args)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{execute_sequence, FinalAnswer, ToolErrorKind};
    use crate::ir::parse_json_ast;

    fn backend() -> FixtureBackend {
        fixture_backend(Fixtures::builtin())
    }

    fn call(tool: &str, args: Value) -> Result<Value, ToolError> {
        backend().invoke(tool, args.as_object().unwrap())
    }

    fn names(v: &Value) -> Vec<&str> {
        v.as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect()
    }

    #[test]
    fn constants_and_aliases() {
        assert_eq!(call("Get_current_location", json!({})).unwrap(), json!("San Diego"));
        assert_eq!(call("GetTime", json!({})).unwrap(), call("Get_current_time", json!({})).unwrap());
    }

    #[test]
    fn cuisine_filter() {
        let all = call("Find_Restaurants_by_Location", json!({"location": "San Diego"})).unwrap();
        let jp = call("Filter_Restaurants_by_Cuisine", json!({"restaurants": all, "cuisine": "Japanese"})).unwrap();
        assert_eq!(names(&jp), vec!["Sakura House", "Umi Sushi", "Kaito Ramen"]);
        let empty = call("Filter_Restaurants_by_Cuisine", json!({"restaurants": [], "cuisine": "Thai"})).unwrap();
        assert_eq!(empty, json!([]));
    }

    #[test]
    fn opening_hours_wrap_midnight() {
        let all = call("Find_Restaurants_by_Location", json!({"location": "San Diego"})).unwrap();
        let late = call("Filter_Restaurants_by_Opening_Hours", json!({"restaurants": all, "time": "01:15"})).unwrap();
        assert_eq!(names(&late), vec!["Taco Norte"]);
    }

    #[test]
    fn lookup_failures_fault() {
        let e = call(
            "Currency_conversion_API",
            json!({"amount": 1.0, "from_currency": "USD", "to_currency": "CHF", "price_time": "2026-01-11"}),
        )
        .unwrap_err();
        assert_eq!(e.kind, ToolErrorKind::RuntimeFault);
        assert_eq!(call("Get_weather", json!({"time": "x"})).unwrap_err().kind, ToolErrorKind::ArgumentRejected);
        assert_eq!(call("Get_Stock_Price", json!({"ticker": "A", "price_time": "d"})).unwrap_err().kind, ToolErrorKind::UnknownTool);
    }

    #[test]
    fn conjunctive_filters_commute() {
        let a = parse_json_ast(
            r#"{"0": {"Find_Restaurants_by_Location": {"location": "San Diego"}},
                "1": {"Filter_Restaurants_by_Cuisine": {"restaurants": "API_RESPONSE_0", "cuisine": "Japanese"}},
                "2": {"Filter_Restaurants_by_ratings": {"restaurants": "API_RESPONSE_1", "ratings": 4.2}}}"#,
        )
        .unwrap();
        let b = parse_json_ast(
            r#"{"0": {"Find_Restaurants_by_Location": {"location": "San Diego"}},
                "1": {"Filter_Restaurants_by_ratings": {"restaurants": "API_RESPONSE_0", "ratings": 4.2}},
                "2": {"Filter_Restaurants_by_Cuisine": {"restaurants": "API_RESPONSE_1", "cuisine": "Japanese"}}}"#,
        )
        .unwrap();
        let be = backend();
        let (ta, tb) = (execute_sequence(&a, &be), execute_sequence(&b, &be));
        assert_eq!(ta.final_answer, tb.final_answer);
        let Some(FinalAnswer::Value(v)) = ta.final_answer else { panic!() };
        assert_eq!(names(&v), vec!["Sakura House", "Kaito Ramen"]);
    }

    #[test]
    fn tree_conversion() {
        let v = call(
            "Currency_conversion_API",
            json!({"amount": 90500.0, "from_currency": "USD", "to_currency": "GBP", "price_time": "2026-01-11"}),
        )
        .unwrap();
        assert_eq!(v, json!(71495.0));
    }
}
