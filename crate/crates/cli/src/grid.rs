//! Parameter axes given as `a:b:n` or as a comma list.

use std::str::FromStr;

/// Inclusive axis of n points between lo and hi.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub log: bool,
    /// Explicit points, kept in the order given.
    pub list: Option<Vec<f64>>,
}

impl FromStr for Axis {
    type Err = String;

    /// `a:b:n`, `v1,v2,...`, or a bare number for a single point.
    fn from_str(s: &str) -> Result<Self, String> {
        if s.contains(',') {
            let list = s
                .split(',')
                .map(|t| {
                    let t = t.trim();
                    match t.parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(v),
                        Ok(_) => Err(format!("axis '{s}' has a non-finite point")),
                        Err(_) => Err(format!("'{t}' is not a number in axis '{s}'")),
                    }
                })
                .collect::<Result<Vec<f64>, String>>()?;
            return Ok(Axis {
                lo: list.iter().copied().fold(f64::INFINITY, f64::min),
                hi: list.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                n: list.len(),
                log: false,
                list: Some(list),
            });
        }
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |t: &str| -> Result<f64, String> {
            let v: f64 = t
                .parse()
                .map_err(|_| format!("'{t}' is not a number in axis '{s}'"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("axis '{s}' has a non-finite bound"))
            }
        };
        match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Ok(Axis {
                    lo: v,
                    hi: v,
                    n: 1,
                    log: false,
                    list: None,
                })
            }
            [a, b, n] => {
                let n: usize = n
                    .parse()
                    .map_err(|_| format!("'{n}' is not a point count in axis '{s}'"))?;
                if n == 0 {
                    return Err(format!("axis '{s}' needs at least one point"));
                }
                Ok(Axis {
                    lo: num(a)?,
                    hi: num(b)?,
                    n,
                    log: false,
                    list: None,
                })
            }
            _ => Err(format!("axis '{s}' must look like a:b:n or v1,v2,...")),
        }
    }
}

impl Axis {
    pub fn with_log(mut self, log: bool) -> Result<Self, String> {
        if log && !(self.lo > 0.0 && self.hi > 0.0) {
            return Err(format!(
                "log axis needs positive bounds, got {}:{}",
                self.lo, self.hi
            ));
        }
        self.log = log;
        Ok(self)
    }

    pub fn values(&self) -> Vec<f64> {
        if let Some(list) = &self.list {
            return list.clone();
        }
        if self.n == 1 {
            return vec![self.lo];
        }
        let t = |i: usize| i as f64 / (self.n - 1) as f64;
        if self.log {
            let (a, b) = (self.lo.ln(), self.hi.ln());
            (0..self.n)
                .map(|i| match i {
                    0 => self.lo,
                    i if i + 1 == self.n => self.hi,
                    i => (a + (b - a) * t(i)).exp(),
                })
                .collect()
        } else {
            (0..self.n)
                .map(|i| self.lo + (self.hi - self.lo) * t(i))
                .collect()
        }
    }
}
