use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use pfc_core::{Polynomial, RationalTF};
use serde::Serialize;

use crate::Failure;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root)
            .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn write<F>(&self, name: &str, f: F) -> Result<PathBuf, Failure>
    where
        F: FnOnce(BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.root.join(name);
        let file = File::create(&path)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        f(BufWriter::new(file)).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        self.write(name, |w| pfc_core::io::write_json(w, value))
    }

    /// `<command>.meta.json`: tool version, seed and a full echo of the options.
    pub fn metadata<T: Serialize>(&self, command: &str, seed: Option<u64>, config: &T) -> Result<PathBuf, Failure> {
        #[derive(Serialize)]
        struct Meta<'a, T> {
            command: &'a str,
            tool: &'a str,
            version: &'a str,
            seed: Option<u64>,
            config: &'a T,
            /// Seconds since the Unix epoch; the only field that varies between identical runs.
            timestamp: u64,
        }
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.json(
            &format!("{command}.meta.json"),
            &Meta {
                command,
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                seed,
                config,
                timestamp,
            },
        )
    }
}

fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.*e}", digits - 1).parse().unwrap_or(x)
}

/// Coefficients below this fraction of the largest one are printed as zero. Cancelled
/// double roots are only accurate to about the square root of machine precision.
const DISPLAY_CUTOFF: f64 = 1e-7;

fn tidy_poly(p: &Polynomial, scale: f64) -> Polynomial {
    let cutoff = DISPLAY_CUTOFF * scale;
    Polynomial::new(
        p.coeffs()
            .iter()
            .map(|&c| if c.abs() < cutoff { 0.0 } else { round_sig(c, 10) })
            .collect(),
    )
}

/// Coefficients rounded to 10 significant digits with round-off residue removed,
/// scaled by the smallest integer multiplier (up to 100) that makes them integral.
pub fn presentable(tf: &RationalTF) -> RationalTF {
    let monic = tf.normalized_to_leading(1.0);
    let scale = monic.num().max_abs_coeff().max(monic.den().max_abs_coeff());
    let all: Vec<f64> = monic.num().coeffs().iter().chain(monic.den().coeffs()).copied().collect();
    let mult = (1..=100)
        .map(f64::from)
        .find(|m| {
            all.iter()
                .all(|c| c.abs() < DISPLAY_CUTOFF * scale || ((c * m) - (c * m).round()).abs() < 1e-6 * m.max(1.0))
        })
        .unwrap_or(1.0);
    RationalTF::new(tidy_poly(&monic.num().scale(mult), scale * mult), tidy_poly(&monic.den().scale(mult), scale * mult))
        .unwrap_or(monic)
}

pub fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presentable_finds_integer_form() {
        let q = RationalTF::from_coeffs(&[-10.0 / 3.0 + 1e-13, 1e-14, 10.0 / 3.0], &[10.0, 18.0, 15.0, 6.0, 1.0]).unwrap();
        assert_eq!(presentable(&q).to_string(), "(10s^2 - 10) / (3s^4 + 18s^3 + 45s^2 + 54s + 30)");
    }
}
