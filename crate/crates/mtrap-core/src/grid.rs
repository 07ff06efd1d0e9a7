//! Sampled-field container and its on-disk JSON schema.
//!
//! A `Grid2D` holds named scalar fields over a uniform rectangle. Row index is
//! the u-direction, column index the v-direction, values row-major. The JSON
//! layout is `{u_range, v_range, shape, fields}` with fields in sorted order,
//! so identical grids serialize byte-identically.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::numerics::{linspace, Mat};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: DeserializeOwned"))]
#[serde(deny_unknown_fields)]
pub struct Grid2D<R> {
    pub u_range: [R; 2],
    pub v_range: [R; 2],
    /// `[Nu, Nv]`
    pub shape: [usize; 2],
    pub fields: BTreeMap<String, Vec<R>>,
}

impl<R: Real + Serialize + DeserializeOwned> Grid2D<R> {
    pub fn new(u_range: [R; 2], v_range: [R; 2], nu: usize, nv: usize) -> Result<Self> {
        if nu < 2 || nv < 2 {
            return Err(GeomError::InvalidGrid(format!(
                "shape [{nu}, {nv}] too small; need at least 2x2"
            )));
        }
        if !(u_range[1] > u_range[0] && v_range[1] > v_range[0]) {
            return Err(GeomError::InvalidGrid("empty parameter range".into()));
        }
        Ok(Self {
            u_range,
            v_range,
            shape: [nu, nv],
            fields: BTreeMap::new(),
        })
    }

    pub fn nu(&self) -> usize {
        self.shape[0]
    }

    pub fn nv(&self) -> usize {
        self.shape[1]
    }

    pub fn us(&self) -> Vec<R> {
        linspace(self.u_range[0], self.u_range[1], self.nu())
    }

    pub fn vs(&self) -> Vec<R> {
        linspace(self.v_range[0], self.v_range[1], self.nv())
    }

    pub fn insert(&mut self, name: &str, values: Vec<R>) -> Result<()> {
        if values.len() != self.nu() * self.nv() {
            return Err(GeomError::InvalidGrid(format!(
                "field '{name}' has {} values, expected {}",
                values.len(),
                self.nu() * self.nv()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::InvalidGrid(format!(
                "field '{name}' contains non-finite values"
            )));
        }
        self.fields.insert(name.to_string(), values);
        Ok(())
    }

    pub fn insert_mat(&mut self, name: &str, m: &Mat<R>) -> Result<()> {
        if m.nu() != self.nu() || m.nv() != self.nv() {
            return Err(GeomError::InvalidGrid(format!(
                "field '{name}' shape [{}, {}] does not match grid [{}, {}]",
                m.nu(),
                m.nv(),
                self.nu(),
                self.nv()
            )));
        }
        self.insert(name, m.data().to_vec())
    }

    pub fn field(&self, name: &str) -> Result<&[R]> {
        self.fields
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| GeomError::InvalidGrid(format!("unknown field '{name}'")))
    }

    pub fn field_mat(&self, name: &str) -> Result<Mat<R>> {
        Mat::from_vec(self.nu(), self.nv(), self.field(name)?.to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu() < 2 || self.nv() < 2 {
            return Err(GeomError::InvalidGrid("shape too small".into()));
        }
        for (name, values) in &self.fields {
            if values.len() != self.nu() * self.nv() {
                return Err(GeomError::InvalidGrid(format!(
                    "field '{name}' length mismatch"
                )));
            }
            if values.iter().any(|x| !x.is_finite()) {
                return Err(GeomError::InvalidGrid(format!(
                    "field '{name}' contains non-finite values"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }

    /// Atomic write: temp file in the same directory, then rename.
    pub fn write_json_file(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read_json_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// CSV flattening of one field: header `u,v,<name>`, 17 significant
    /// digits, LF line endings, (u_min, v_min) first, v fastest.
    pub fn to_csv(&self, name: &str) -> Result<String> {
        let values = self.field(name)?;
        let us = self.us();
        let vs = self.vs();
        let mut out = String::with_capacity(values.len() * 32);
        out.push_str(&format!("u,v,{name}\n"));
        for (i, &u) in us.iter().enumerate() {
            for (j, &v) in vs.iter().enumerate() {
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e}\n",
                    u.to_f64_lossy(),
                    v.to_f64_lossy(),
                    values[i * self.nv() + j].to_f64_lossy()
                ));
            }
        }
        Ok(out)
    }
}

/// Write `bytes` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = dir.to_path_buf();
    let stem = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    tmp.push(format!(".{stem}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_bit_identical() {
        let mut g: Grid2D<f64> = Grid2D::new([0.0, 1.0], [-0.5, 0.5], 3, 4).unwrap();
        g.insert(
            "k",
            (0..12).map(|i| (i as f64).sin() * 1.0e-7 + 1.0 / 3.0).collect(),
        )
        .unwrap();
        let s1 = g.to_json().unwrap();
        let g2 = Grid2D::<f64>::from_json(&s1).unwrap();
        assert_eq!(g, g2);
        assert_eq!(s1, g2.to_json().unwrap());
    }

    #[test]
    fn csv_contract() {
        let mut g: Grid2D<f64> = Grid2D::new([0.0, 1.0], [2.0, 3.0], 2, 3).unwrap();
        g.insert("f", vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let csv = g.to_csv("f").unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2 * 3 + 1);
        assert_eq!(lines[0], "u,v,f");
        assert!(lines[1].starts_with("0.0000000000000000e0,2.0000000000000000e0"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        let mut g: Grid2D<f64> = Grid2D::new([0.0, 1.0], [0.0, 1.0], 2, 2).unwrap();
        assert!(g.insert("short", vec![1.0]).is_err());
        assert!(g.insert("nan", vec![0.0, 0.0, 0.0, f64::NAN]).is_err());
        assert!(Grid2D::<f64>::new([0.0, 1.0], [0.0, 1.0], 1, 2).is_err());
    }
}
