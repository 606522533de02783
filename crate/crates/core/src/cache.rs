//! Content-addressed on-disk cache for spectra and determinants.
//!
//! Each entry is `<sha256 hex>.csv` under the cache directory, hashed from
//! the full provenance string. The file starts with `# key=value` header
//! lines repeating that provenance; a header mismatch is treated as a miss.
//! Writes go to a temporary file in the same directory and are renamed
//! into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{spectrum, ComplexTorus, LaplaceConvention, SpectralEntry, SpectrumStream};
use crate::report::{format_float, FORMAT_VERSION};
use crate::zeta::{ZetaResult, ZetaRoute};

/// Environment variable that overrides the cache directory.
pub const CACHE_DIR_ENV: &str = "SPECTORUS_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DiskCache { dir })
    }

    /// `$SPECTORUS_CACHE_DIR` if set, else `fallback`, else no cache.
    pub fn from_env(fallback: Option<&Path>) -> Result<Option<Self>> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => Ok(Some(Self::new(PathBuf::from(d))?)),
            _ => fallback.map(|p| Self::new(p.to_path_buf())).transpose(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(provenance: &[(&str, String)]) -> String {
        let mut h = Sha256::new();
        for (k, v) in provenance {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.csv"))
    }

    fn header(kind: &str, provenance: &[(&str, String)]) -> String {
        let mut s = format!("# spectorus-{kind} format_version={FORMAT_VERSION}\n");
        for (k, v) in provenance {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s
    }

    fn write_atomic(&self, path: &Path, contents: &str) -> Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }

    /// Body lines after a header that matches exactly, or None.
    fn read_body(path: &Path, header: &str) -> Option<Vec<String>> {
        let text = fs::read_to_string(path).ok()?;
        let body = text.strip_prefix(header)?;
        Some(body.lines().map(str::to_string).collect())
    }

    fn spectrum_provenance(
        torus: &ComplexTorus,
        conv: LaplaceConvention,
        q: usize,
        lambda_max: f64,
    ) -> Vec<(&'static str, String)> {
        vec![
            ("torus", torus.canonical_string()),
            ("convention", conv.name().to_string()),
            ("q", q.to_string()),
            ("lambda_max", format_float(lambda_max)),
        ]
    }

    /// The spectrum up to lambda_max, from disk when present.
    pub fn spectrum(
        &self,
        torus: &ComplexTorus,
        conv: LaplaceConvention,
        q: usize,
        lambda_max: f64,
    ) -> Result<(SpectrumStream, Lookup)> {
        let prov = Self::spectrum_provenance(torus, conv, q, lambda_max);
        let header = Self::header("spectrum", &prov);
        let path = self.path_for(&Self::key(&prov));
        if let Some(body) = Self::read_body(&path, &header) {
            if let Some(s) = parse_spectrum(&body, torus.n(), q, conv, lambda_max) {
                return Ok((s, Lookup::Hit));
            }
        }
        let s = spectrum(torus, conv, q, lambda_max)?;
        let mut out = header;
        out.push_str(&format!(
            "# tail_bound={}\n# tail_t_min={}\n# zero_modes={}\nlambda,multiplicity\n",
            format_float(s.tail_bound),
            format_float(s.tail_t_min),
            s.zero_modes
        ));
        for e in &s.entries {
            out.push_str(&format!("{},{}\n", format_float(e.lambda), e.multiplicity));
        }
        self.write_atomic(&path, &out)?;
        Ok((s, Lookup::Miss))
    }

    /// A determinant computed by `compute`, keyed by `provenance`.
    pub fn det_with<F>(&self, provenance: &[(&str, String)], compute: F) -> Result<(ZetaResult, Lookup)>
    where
        F: FnOnce() -> Result<ZetaResult>,
    {
        let header = Self::header("det", provenance);
        let path = self.path_for(&Self::key(provenance));
        if let Some(body) = Self::read_body(&path, &header) {
            if let Some(z) = parse_det(&body) {
                return Ok((z, Lookup::Hit));
            }
        }
        let z = compute()?;
        let route = match z.route {
            ZetaRoute::Abks => "abks",
            ZetaRoute::EpsteinContinuation => "epstein_continuation",
        };
        let out = format!(
            "{header}field,value\nzeta0,{}\nzeta_prime0,{}\ndet,{}\nest_error,{}\nroute,{route}\n",
            format_float(z.zeta_at_0),
            format_float(z.zeta_prime_at_0),
            format_float(z.det),
            format_float(z.est_error),
        );
        self.write_atomic(&path, &out)?;
        Ok((z, Lookup::Miss))
    }
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.strip_prefix("# ")?.strip_prefix(key)?.strip_prefix('=')
}

fn parse_spectrum(
    body: &[String],
    n: usize,
    q: usize,
    conv: LaplaceConvention,
    lambda_max: f64,
) -> Option<SpectrumStream> {
    let tail_bound = parse_f64(header_value(body.first()?, "tail_bound")?)?;
    let tail_t_min = parse_f64(header_value(body.get(1)?, "tail_t_min")?)?;
    let zero_modes = header_value(body.get(2)?, "zero_modes")?.parse().ok()?;
    if body.get(3)?.as_str() != "lambda,multiplicity" {
        return None;
    }
    let mut entries = Vec::with_capacity(body.len().saturating_sub(4));
    for line in &body[4..] {
        let (l, m) = line.split_once(',')?;
        entries.push(SpectralEntry {
            lambda: parse_f64(l)?,
            multiplicity: m.trim().parse().ok()?,
        });
    }
    Some(SpectrumStream {
        n,
        q,
        convention: conv,
        entries,
        lambda_max,
        tail_bound,
        tail_t_min,
        zero_modes,
    })
}

fn parse_det(body: &[String]) -> Option<ZetaResult> {
    if body.first()?.as_str() != "field,value" {
        return None;
    }
    let get = |name: &str| {
        body.iter()
            .find_map(|l| l.strip_prefix(name).and_then(|r| r.strip_prefix(',')))
    };
    let route = match get("route")? {
        "abks" => ZetaRoute::Abks,
        "epstein_continuation" => ZetaRoute::EpsteinContinuation,
        _ => return None,
    };
    Some(ZetaResult {
        zeta_at_0: parse_f64(get("zeta0")?)?,
        zeta_prime_at_0: parse_f64(get("zeta_prime0")?)?,
        det: parse_f64(get("det")?)?,
        est_error: parse_f64(get("est_error")?)?,
        route,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zeta::epstein_zeta_det;
    use num_complex::Complex64;

    #[test]
    fn spectrum_hit_equals_cold_run() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path()).unwrap();
        let t = ComplexTorus::from_tau(Complex64::new(0.3, 1.7)).unwrap();
        let (cold, l1) = cache.spectrum(&t, LaplaceConvention::DeRham, 0, 400.0).unwrap();
        let (warm, l2) = cache.spectrum(&t, LaplaceConvention::DeRham, 0, 400.0).unwrap();
        assert_eq!((l1, l2), (Lookup::Miss, Lookup::Hit));
        assert_eq!(cold, warm);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn det_hit_equals_cold_run_and_corruption_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path()).unwrap();
        let t = ComplexTorus::from_tau(Complex64::new(0.0, 2.0)).unwrap();
        let prov = vec![("torus", t.canonical_string()), ("convention", "de-rham".to_string())];
        let compute = || epstein_zeta_det(&t, LaplaceConvention::DeRham, 0);
        let (cold, _) = cache.det_with(&prov, compute).unwrap();
        let (warm, hit) = cache.det_with(&prov, compute).unwrap();
        assert_eq!(hit, Lookup::Hit);
        assert_eq!(cold, warm);
        let path = cache.path_for(&DiskCache::key(&prov));
        fs::write(&path, "garbage").unwrap();
        let (again, hit) = cache.det_with(&prov, compute).unwrap();
        assert_eq!(hit, Lookup::Miss);
        assert_eq!(again, cold);
    }
}
