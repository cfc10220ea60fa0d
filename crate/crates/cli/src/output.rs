//! CSV rows, configuration hashes and the metadata sidecar.

use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentSpec, RawConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One result line: a metric of one design at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub design: String,
    pub snr_db: f64,
    pub n_users: usize,
    pub m_antennas: usize,
    pub metric_name: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub failures: u64,
    pub seed: u64,
    pub config_hash: String,
}

fn hashed_form(raw: &RawConfig) -> RawConfig {
    let mut raw = raw.clone();
    raw.output = None;
    raw
}

/// First 16 hex digits of the SHA-256 of the resolved configuration and the
/// software version. The output path does not enter the hash.
pub fn config_hash(spec: &ExperimentSpec) -> String {
    let text = toml::to_string(&hashed_form(spec.resolved())).expect("configuration serializes");
    let mut hasher = Sha256::new();
    hasher.update(format!("pzf-harness {VERSION}\n").as_bytes());
    hasher.update(text.as_bytes());
    hasher.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    software: &'a str,
    version: &'a str,
    config_hash: String,
    qam_order: usize,
    config: RawConfig,
}

/// TOML sidecar with the version, hash and fully resolved configuration.
pub fn metadata(spec: &ExperimentSpec) -> String {
    let meta = Metadata {
        software: "pzf-harness",
        version: VERSION,
        config_hash: config_hash(spec),
        qam_order: spec.qam.order(),
        config: hashed_form(spec.resolved()),
    };
    toml::to_string(&meta).expect("metadata serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    #[test]
    fn hash_ignores_output_path_but_not_seed() {
        let a = preset("fig4").unwrap();
        let mut b = a.clone();
        b.output = Some("elsewhere.csv".into());
        let mut c = a.clone();
        c.seed += 1;
        let h = |r: RawConfig| config_hash(&r.validate().unwrap());
        let ha = h(a);
        assert_eq!(ha.len(), 16);
        assert_eq!(ha, h(b));
        assert_ne!(ha, h(c));
    }

    #[test]
    fn csv_has_the_documented_header() {
        let mut buf = Vec::new();
        write_csv(
            &[Row {
                experiment: "sumrate".into(),
                design: "ZF".into(),
                snr_db: 10.0,
                n_users: 3,
                m_antennas: 3,
                metric_name: "sum_rate".into(),
                mean: 2.5,
                stderr: 0.1,
                trials: 10,
                failures: 0,
                seed: 1,
                config_hash: "00".into(),
            }],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,design,snr_db,n_users,m_antennas,metric_name,mean,stderr,trials,failures,seed,config_hash"
        );
        assert_eq!(
            lines.next().unwrap(),
            "sumrate,ZF,10.0,3,3,sum_rate,2.5,0.1,10,0,1,00"
        );
    }

    #[test]
    fn metadata_records_defaults() {
        let spec = preset("fig6").unwrap().validate().unwrap();
        let meta = metadata(&spec);
        assert!(meta.contains(&format!("version = \"{VERSION}\"")));
        assert!(meta.contains("qam_order = 4"));
        assert!(meta.contains("improvement_threshold = 0.05"));
        assert!(meta.contains(&config_hash(&spec)));
    }
}
