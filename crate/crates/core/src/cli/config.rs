use serde_json::{Map, Value};

use super::CliError;
use crate::exponents::{ExponentParams, GeometryExponents};
use crate::geometry::{Domain, MushroomSpec, Point};

/// JSON run configuration. Every value read is recorded, defaults included,
/// so the manifest echoes exactly what the run consumed.
pub struct Config {
    root: Value,
    effective: Value,
}

fn schema(path: &str, message: impl Into<String>) -> CliError {
    CliError::Schema { path: path.to_string(), message: message.into() }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let root: Value = serde_json::from_str(text).map_err(|e| schema("", format!("invalid JSON: {e}")))?;
        if !root.is_object() {
            return Err(schema("", "configuration must be a JSON object"));
        }
        Ok(Self { root, effective: Value::Object(Map::new()) })
    }

    pub fn effective(&self) -> &Value {
        &self.effective
    }

    fn lookup(&self, path: &str) -> Option<&Value> {
        path.split('.').try_fold(&self.root, |v, key| v.get(key)).filter(|v| !v.is_null())
    }

    pub fn has(&self, path: &str) -> bool {
        self.lookup(path).is_some()
    }

    pub fn record(&mut self, path: &str, value: Value) {
        let mut cur = &mut self.effective;
        let keys: Vec<&str> = path.split('.').collect();
        for key in &keys[..keys.len() - 1] {
            let obj = cur.as_object_mut().expect("object");
            cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
        }
        cur.as_object_mut().expect("object").insert(keys[keys.len() - 1].to_string(), value);
    }

    fn required(&self, path: &str) -> Result<Value, CliError> {
        self.lookup(path).cloned().ok_or_else(|| schema(path, "missing required field"))
    }

    pub fn f64(&mut self, path: &str) -> Result<f64, CliError> {
        let v = self.required(path)?;
        let x = v.as_f64().ok_or_else(|| schema(path, "expected a number"))?;
        self.record(path, v);
        Ok(x)
    }

    pub fn f64_or(&mut self, path: &str, default: f64) -> Result<f64, CliError> {
        if self.has(path) {
            self.f64(path)
        } else {
            self.record(path, Value::from(default));
            Ok(default)
        }
    }

    pub fn u64(&mut self, path: &str) -> Result<u64, CliError> {
        let v = self.required(path)?;
        let x = v.as_u64().ok_or_else(|| schema(path, "expected a nonnegative integer"))?;
        self.record(path, v);
        Ok(x)
    }

    pub fn u64_or(&mut self, path: &str, default: u64) -> Result<u64, CliError> {
        if self.has(path) {
            self.u64(path)
        } else {
            self.record(path, Value::from(default));
            Ok(default)
        }
    }

    pub fn i64(&mut self, path: &str) -> Result<i64, CliError> {
        let v = self.required(path)?;
        let x = v.as_i64().ok_or_else(|| schema(path, "expected an integer"))?;
        self.record(path, v);
        Ok(x)
    }

    pub fn string(&mut self, path: &str) -> Result<String, CliError> {
        let v = self.required(path)?;
        let s = v.as_str().ok_or_else(|| schema(path, "expected a string"))?.to_string();
        self.record(path, v);
        Ok(s)
    }

    pub fn string_or(&mut self, path: &str, default: &str) -> Result<String, CliError> {
        if self.has(path) {
            self.string(path)
        } else {
            self.record(path, Value::from(default));
            Ok(default.to_string())
        }
    }

    pub fn bool_or(&mut self, path: &str, default: bool) -> Result<bool, CliError> {
        match self.lookup(path).cloned() {
            Some(v) => {
                let b = v.as_bool().ok_or_else(|| schema(path, "expected a boolean"))?;
                self.record(path, v);
                Ok(b)
            }
            None => {
                self.record(path, Value::from(default));
                Ok(default)
            }
        }
    }

    pub fn f64_list(&mut self, path: &str) -> Result<Vec<f64>, CliError> {
        let v = self.required(path)?;
        let list = v
            .as_array()
            .ok_or_else(|| schema(path, "expected an array of numbers"))?
            .iter()
            .enumerate()
            .map(|(i, x)| x.as_f64().ok_or_else(|| schema(&format!("{path}.{i}"), "expected a number")))
            .collect::<Result<Vec<_>, _>>()?;
        self.record(path, v);
        Ok(list)
    }

    pub fn point(&mut self, path: &str) -> Result<Point, CliError> {
        let v = self.f64_list(path)?;
        if v.len() != 2 {
            return Err(schema(path, "expected [x, y]"));
        }
        Ok(Point::new(v[0], v[1]))
    }

    /// Array of fixed-length numeric tuples.
    pub fn tuples(&mut self, path: &str, len: usize) -> Result<Vec<Vec<f64>>, CliError> {
        let v = self.required(path)?;
        let arr = v.as_array().ok_or_else(|| schema(path, "expected an array"))?;
        let mut out = Vec::with_capacity(arr.len());
        for (i, item) in arr.iter().enumerate() {
            let p = format!("{path}.{i}");
            let t = item
                .as_array()
                .ok_or_else(|| schema(&p, format!("expected an array of {len} numbers")))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| schema(&p, "expected a number")))
                .collect::<Result<Vec<_>, _>>()?;
            if t.len() != len {
                return Err(schema(&p, format!("expected {len} numbers")));
            }
            out.push(t);
        }
        self.record(path, v);
        Ok(out)
    }

    pub fn exponents(&mut self) -> Result<ExponentParams, CliError> {
        let n = self.u64_or("exponents.n", 2)?;
        if n != 2 {
            return Err(schema("exponents.n", "only n = 2 is supported"));
        }
        let p = self.f64("exponents.p")?;
        let q = self.f64("exponents.q")?;
        let delta = self.f64("exponents.delta")?;
        let tau = self.f64("exponents.tau")?;
        ExponentParams::new(2, p, q, delta, tau).map_err(|e| schema("exponents", e.to_string()))
    }

    pub fn geometry(&mut self) -> Result<GeometryExponents, CliError> {
        let g = GeometryExponents {
            s: self.f64_or("geometry.s", 1.0)?,
            beta: self.f64_or("geometry.beta", 1.0)?,
            sigma: self.f64_or("geometry.sigma", 1.0)?,
            h: self.f64_or("geometry.h", 1.0)?,
        };
        g.validate().map_err(|e| schema("geometry", e.to_string()))?;
        Ok(g)
    }

    pub fn mushroom_spec(&mut self, block: &str) -> Result<MushroomSpec, CliError> {
        let positions = if self.has(&format!("{block}.positions")) {
            Some(self.f64_list(&format!("{block}.positions"))?)
        } else {
            None
        };
        Ok(MushroomSpec {
            side: self.f64(&format!("{block}.side"))?,
            radii: self.f64_list(&format!("{block}.radii"))?,
            sigma: self.f64(&format!("{block}.sigma"))?,
            h: self.f64(&format!("{block}.h"))?,
            positions,
        })
    }

    /// Domain described by the block at `block` (normally `domain`).
    pub fn domain_at(&mut self, block: &str) -> Result<Domain, CliError> {
        let kind_path = format!("{block}.kind");
        let kind = self.string(&kind_path)?;
        let built = match kind.as_str() {
            "unit-square" => Ok(Domain::unit_square()),
            "unit-disk" => Ok(Domain::unit_disk()),
            "half-plane" => Ok(Domain::clipped_half_plane()),
            "square" => Domain::square(self.f64(&format!("{block}.side"))?),
            "rectangle" => {
                let min = self.point(&format!("{block}.min"))?;
                let max = self.point(&format!("{block}.max"))?;
                Domain::rectangle(min, max)
            }
            "disk" => {
                let c = self.point(&format!("{block}.center"))?;
                Domain::disk(c, self.f64(&format!("{block}.radius"))?)
            }
            "mushroom" => Domain::mushroom(&self.mushroom_spec(block)?),
            other => return Err(schema(&kind_path, format!("unknown domain kind '{other}'"))),
        };
        let domain = built.map_err(|e| schema(block, e.to_string()))?;
        let x0_path = format!("{block}.x0");
        if self.has(&x0_path) {
            let x0 = self.point(&x0_path)?;
            domain.with_base_point(x0).map_err(|e| schema(&x0_path, e.to_string()))
        } else {
            let x0 = domain.x0();
            self.record(&x0_path, Value::from(vec![x0.x, x0.y]));
            Ok(domain)
        }
    }

    pub fn domain(&mut self) -> Result<Domain, CliError> {
        self.domain_at("domain")
    }
}
