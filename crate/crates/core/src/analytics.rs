//! Append-only JSON Lines event store and the shopper-behavior indicators
//! computed over it.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{InteractionEvent, InteractionKind, VisitRecord};

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Record {
    Visit(VisitRecord),
    Interaction(InteractionEvent),
}

/// Stored record with its sequence number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub record: Record,
}

/// Durable append-only store: one JSON object per line, strictly
/// increasing sequence numbers.
pub struct EventStore {
    path: PathBuf,
    writer: std::io::BufWriter<std::fs::File>,
    next_seq: u64,
}

impl EventStore {
    /// Opens (or creates) a store; appends continue after the highest
    /// existing sequence number.
    pub fn open(path: &Path) -> Result<Self> {
        let next_seq = if path.exists() {
            read_records(path)?
                .last()
                .map(|r| r.seq + 1)
                .unwrap_or(1)
        } else {
            1
        };
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(EventStore {
            path: path.to_path_buf(),
            writer: std::io::BufWriter::new(file),
            next_seq,
        })
    }

    pub fn append(&mut self, record: Record) -> Result<u64> {
        let seq = self.next_seq;
        let stored = StoredRecord { seq, record };
        let line = serde_json::to_string(&stored).expect("record serializes");
        writeln!(self.writer, "{}", line).map_err(|e| Error::io(&self.path, e))?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        self.next_seq += 1;
        Ok(seq)
    }
}

/// Reads a whole log back, verifying sequence monotonicity.
pub fn read_records(path: &Path) -> Result<Vec<StoredRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    let mut last_seq = 0u64;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StoredRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("{} line {}: {}", path.display(), i + 1, e)))?;
        if record.seq <= last_seq {
            return Err(Error::format(format!(
                "{} line {}: sequence numbers must strictly increase",
                path.display(),
                i + 1
            )));
        }
        last_seq = record.seq;
        records.push(record);
    }
    Ok(records)
}

/// Product catalog: (zone_id, col, row) -> (product, category).
pub type CellCatalog = BTreeMap<(String, u32, u32), (String, String)>;

/// Record filters. Each narrows the set of counted records.
#[derive(Debug, Clone, Default)]
pub struct IndicatorFilters {
    /// Restrict all records to one camera.
    pub camera_id: Option<String>,
    /// Restrict interactions and dwell intervals to one zone.
    pub zone_id: Option<String>,
    /// Camera whose visits define "total visitors" (entrance camera);
    /// `None` counts visits at every camera.
    pub entrance_camera: Option<String>,
}

/// Minimum dwell in a zone before a visit counts as "in the zone".
pub const ZONE_DWELL_MIN_MS: u64 = 500;

/// Averages are `None` when the bucket has no qualifying records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketMetrics {
    pub start_ms: u64,
    pub end_ms: u64,
    pub total_visitors: u64,
    pub visitors_per_zone: BTreeMap<String, u64>,
    pub visitors_interacting: u64,
    pub interactions_per_person: Option<f64>,
    pub pct_interacting: Option<f64>,
    pub avg_visit_ms: Option<f64>,
    pub products_picked_up: u64,
    pub products_relocated: u64,
    pub products_touched: u64,
    pub interaction_count: u64,
    pub interaction_durations_ms: Vec<u64>,
    pub avg_interaction_ms: Option<f64>,
    pub per_product: BTreeMap<String, u64>,
    pub per_category: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReport {
    pub window_start_ms: u64,
    pub window_end_ms: u64,
    pub bucket_ms: u64,
    pub buckets: Vec<BucketMetrics>,
}

fn visit_passes(v: &VisitRecord, filters: &IndicatorFilters) -> bool {
    filters
        .camera_id
        .as_ref()
        .map_or(true, |c| &v.camera_id == c)
}

fn interaction_passes(e: &InteractionEvent, filters: &IndicatorFilters) -> bool {
    filters
        .camera_id
        .as_ref()
        .map_or(true, |c| &e.camera_id == c)
        && filters.zone_id.as_ref().map_or(true, |z| &e.zone_id == z)
}

/// Computes every indicator per bucket. Visits count in each bucket their
/// [entry, exit] interval overlaps; interactions count in the bucket of
/// their start time; average visit time covers visits ending in the bucket.
pub fn compute_indicators(
    records: &[StoredRecord],
    window: (u64, u64),
    bucket_ms: u64,
    filters: &IndicatorFilters,
    catalog: &CellCatalog,
) -> Result<IndicatorReport> {
    let (w0, w1) = window;
    if w1 <= w0 {
        return Err(Error::argument("window must be nonempty"));
    }
    if bucket_ms == 0 {
        return Err(Error::argument("bucket_ms must be positive"));
    }
    let visits: Vec<&VisitRecord> = records
        .iter()
        .filter_map(|r| match &r.record {
            Record::Visit(v) if visit_passes(v, filters) => Some(v),
            _ => None,
        })
        .collect();
    let interactions: Vec<&InteractionEvent> = records
        .iter()
        .filter_map(|r| match &r.record {
            Record::Interaction(e) if interaction_passes(e, filters) => Some(e),
            _ => None,
        })
        .collect();

    let mut buckets = Vec::new();
    let mut b0 = w0;
    while b0 < w1 {
        let b1 = (b0 + bucket_ms).min(w1);

        let overlapping: Vec<&&VisitRecord> = visits
            .iter()
            .filter(|v| v.entry_ms < b1 && v.exit_ms >= b0)
            .collect();
        let total_visitors = overlapping
            .iter()
            .filter(|v| {
                filters
                    .entrance_camera
                    .as_ref()
                    .map_or(true, |c| &v.camera_id == c)
            })
            .count() as u64;

        let mut visitors_per_zone: BTreeMap<String, u64> = BTreeMap::new();
        for visit in &overlapping {
            let mut zones_seen: HashSet<&str> = HashSet::new();
            for dwell in &visit.zones {
                if let Some(z) = &filters.zone_id {
                    if &dwell.zone_id != z {
                        continue;
                    }
                }
                // dwell must overlap the bucket and be long enough overall
                if dwell.enter_ms < b1
                    && dwell.exit_ms >= b0
                    && dwell.exit_ms - dwell.enter_ms >= ZONE_DWELL_MIN_MS
                {
                    zones_seen.insert(&dwell.zone_id);
                }
            }
            for z in zones_seen {
                *visitors_per_zone.entry(z.to_string()).or_default() += 1;
            }
        }

        let in_bucket: Vec<&&InteractionEvent> = interactions
            .iter()
            .filter(|e| e.start_ms >= b0 && e.start_ms < b1)
            .collect();

        let mut interacting: HashSet<(&str, u64)> = HashSet::new();
        for e in &in_bucket {
            interacting.insert((e.camera_id.as_str(), e.track_id));
        }
        let visitors_interacting = interacting.len() as u64;

        let interaction_count = in_bucket.len() as u64;
        let interactions_per_person = if visitors_interacting > 0 {
            Some(interaction_count as f64 / visitors_interacting as f64)
        } else {
            None
        };
        let pct_interacting = if total_visitors > 0 {
            Some(100.0 * visitors_interacting as f64 / total_visitors as f64)
        } else {
            None
        };

        let ended: Vec<&&VisitRecord> = visits
            .iter()
            .filter(|v| v.exit_ms >= b0 && v.exit_ms < b1)
            .collect();
        let avg_visit_ms = if !ended.is_empty() {
            Some(
                ended
                    .iter()
                    .map(|v| (v.exit_ms - v.entry_ms) as f64)
                    .sum::<f64>()
                    / ended.len() as f64,
            )
        } else {
            None
        };

        let mut products_picked_up = 0;
        let mut products_relocated = 0;
        let mut products_touched = 0;
        let mut durations = Vec::new();
        let mut per_product: BTreeMap<String, u64> = BTreeMap::new();
        let mut per_category: BTreeMap<String, u64> = BTreeMap::new();
        for e in &in_bucket {
            match e.kind {
                InteractionKind::Positive => products_picked_up += 1,
                InteractionKind::Negative => products_relocated += 1,
                InteractionKind::Neutral => products_touched += 1,
            }
            durations.push(e.end_ms - e.start_ms);
            if let Some((product, category)) =
                catalog.get(&(e.zone_id.clone(), e.cell.0, e.cell.1))
            {
                *per_product.entry(product.clone()).or_default() += 1;
                *per_category.entry(category.clone()).or_default() += 1;
            }
        }
        let avg_interaction_ms = if !durations.is_empty() {
            Some(durations.iter().sum::<u64>() as f64 / durations.len() as f64)
        } else {
            None
        };

        buckets.push(BucketMetrics {
            start_ms: b0,
            end_ms: b1,
            total_visitors,
            visitors_per_zone,
            visitors_interacting,
            interactions_per_person,
            pct_interacting,
            avg_visit_ms,
            products_picked_up,
            products_relocated,
            products_touched,
            interaction_count,
            interaction_durations_ms: durations,
            avg_interaction_ms,
            per_product,
            per_category,
        });
        b0 = b1;
    }

    Ok(IndicatorReport {
        window_start_ms: w0,
        window_end_ms: w1,
        bucket_ms,
        buckets,
    })
}

/// Sales conversion needs an external purchase feed; the cameras alone
/// cannot observe transactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conversion {
    Ratio(f64),
    Unavailable,
}

pub fn sales_conversion(
    records: &[StoredRecord],
    window: (u64, u64),
    filters: &IndicatorFilters,
    transactions: Option<u64>,
) -> Result<Conversion> {
    let Some(tx) = transactions else {
        return Ok(Conversion::Unavailable);
    };
    let report = compute_indicators(records, window, window.1 - window.0, filters, &CellCatalog::new())?;
    let visitors = report.buckets[0].total_visitors;
    if visitors == 0 {
        return Ok(Conversion::Unavailable);
    }
    Ok(Conversion::Ratio(tx as f64 / visitors as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{ContactPoint, ZoneDwell};

    fn visit(camera: &str, track: u64, entry: u64, exit: u64, zones: Vec<ZoneDwell>) -> Record {
        Record::Visit(VisitRecord {
            camera_id: camera.into(),
            track_id: track,
            entry_ms: entry,
            exit_ms: exit,
            zones,
        })
    }

    fn interaction(camera: &str, track: u64, kind: InteractionKind, start: u64, end: u64) -> Record {
        Record::Interaction(InteractionEvent {
            camera_id: camera.into(),
            zone_id: "z1".into(),
            track_id: track,
            kind,
            start_ms: start,
            end_ms: end,
            contact: ContactPoint { x: 0.0, y: 0.0, z: 1300.0 },
            cell: (0, 0),
        })
    }

    fn stored(records: Vec<Record>) -> Vec<StoredRecord> {
        records
            .into_iter()
            .enumerate()
            .map(|(i, record)| StoredRecord {
                seq: i as u64 + 1,
                record,
            })
            .collect()
    }

    #[test]
    fn append_assigns_increasing_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let mut store = EventStore::open(&path).unwrap();
        assert_eq!(store.append(visit("cam1", 1, 0, 1000, vec![])).unwrap(), 1);
        assert_eq!(store.append(visit("cam1", 2, 0, 1000, vec![])).unwrap(), 2);
        drop(store);
        // reopening continues the sequence
        let mut store = EventStore::open(&path).unwrap();
        assert_eq!(store.append(visit("cam1", 3, 0, 1000, vec![])).unwrap(), 3);
        let records = read_records(&path).unwrap();
        assert_eq!(records.len(), 3);
    }

    #[test]
    fn round_trip_preserves_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let mut store = EventStore::open(&path).unwrap();
        let written = vec![
            visit("cam1", 1, 0, 5000, vec![ZoneDwell { zone_id: "z1".into(), enter_ms: 100, exit_ms: 900 }]),
            interaction("cam1", 1, InteractionKind::Positive, 200, 700),
        ];
        for r in &written {
            store.append(r.clone()).unwrap();
        }
        let records = read_records(&path).unwrap();
        let back: Vec<Record> = records.into_iter().map(|r| r.record).collect();
        assert_eq!(back, written);
    }

    #[test]
    fn interaction_schema_field_names() {
        let stored = StoredRecord {
            seq: 1,
            record: interaction("cam1", 9, InteractionKind::Neutral, 10, 20),
        };
        let value: serde_json::Value =
            serde_json::from_str(&serde_json::to_string(&stored).unwrap()).unwrap();
        for key in ["seq", "kind", "camera_id", "zone_id", "track_id", "type", "start_ms", "end_ms", "contact", "cell"] {
            assert!(value.get(key).is_some(), "missing {}", key);
        }
        assert_eq!(value["kind"], "interaction");
        assert_eq!(value["type"], "neutral");
        assert!(value["contact"].get("x").is_some());
        assert_eq!(value["cell"], serde_json::json!([0, 0]));
    }

    #[test]
    fn percentage_interacting_ratio() {
        let records = stored(vec![
            visit("cam1", 1, 0, 1000, vec![]),
            visit("cam1", 2, 0, 1000, vec![]),
            visit("cam1", 3, 0, 1000, vec![]),
            interaction("cam1", 1, InteractionKind::Positive, 100, 300),
        ]);
        let report = compute_indicators(
            &records,
            (0, 3_600_000),
            3_600_000,
            &IndicatorFilters::default(),
            &CellCatalog::new(),
        )
        .unwrap();
        let bucket = &report.buckets[0];
        assert_eq!(bucket.total_visitors, 3);
        assert_eq!(bucket.visitors_interacting, 1);
        let pct = bucket.pct_interacting.unwrap();
        assert!((pct - 33.33).abs() < 0.01, "pct {}", pct);
    }

    #[test]
    fn empty_window_rejected() {
        assert!(matches!(
            compute_indicators(&[], (10, 10), 10, &IndicatorFilters::default(), &CellCatalog::new()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn empty_buckets_have_no_averages() {
        let report = compute_indicators(
            &stored(vec![]),
            (0, 2000),
            1000,
            &IndicatorFilters::default(),
            &CellCatalog::new(),
        )
        .unwrap();
        assert_eq!(report.buckets.len(), 2);
        assert_eq!(report.buckets[0].avg_visit_ms, None);
        assert_eq!(report.buckets[0].avg_interaction_ms, None);
        assert_eq!(report.buckets[0].pct_interacting, None);
    }

    #[test]
    fn zone_dwell_debounce() {
        let records = stored(vec![
            visit("cam1", 1, 0, 5000, vec![ZoneDwell { zone_id: "z1".into(), enter_ms: 100, exit_ms: 900 }]),
            visit("cam1", 2, 0, 5000, vec![ZoneDwell { zone_id: "z1".into(), enter_ms: 100, exit_ms: 400 }]),
        ]);
        let report = compute_indicators(
            &records,
            (0, 10_000),
            10_000,
            &IndicatorFilters::default(),
            &CellCatalog::new(),
        )
        .unwrap();
        // 300 ms dwell is below the 500 ms debounce
        assert_eq!(report.buckets[0].visitors_per_zone.get("z1"), Some(&1));
    }

    #[test]
    fn catalog_maps_cells_to_products() {
        let mut catalog = CellCatalog::new();
        catalog.insert(("z1".into(), 0, 0), ("bleach".into(), "cleaning".into()));
        let records = stored(vec![
            visit("cam1", 1, 0, 1000, vec![]),
            interaction("cam1", 1, InteractionKind::Positive, 100, 300),
            interaction("cam1", 1, InteractionKind::Neutral, 400, 500),
        ]);
        let report = compute_indicators(
            &records,
            (0, 1000),
            1000,
            &IndicatorFilters::default(),
            &catalog,
        )
        .unwrap();
        assert_eq!(report.buckets[0].per_product.get("bleach"), Some(&2));
        assert_eq!(report.buckets[0].per_category.get("cleaning"), Some(&2));
        assert_eq!(report.buckets[0].products_picked_up, 1);
        assert_eq!(report.buckets[0].products_touched, 1);
    }

    #[test]
    fn filters_never_increase_counts() {
        let records = stored(vec![
            visit("cam1", 1, 0, 1000, vec![]),
            visit("cam2", 1, 0, 1000, vec![]),
            interaction("cam1", 1, InteractionKind::Positive, 100, 300),
            interaction("cam2", 1, InteractionKind::Negative, 100, 300),
        ]);
        let all = compute_indicators(&records, (0, 1000), 1000, &IndicatorFilters::default(), &CellCatalog::new()).unwrap();
        let filtered = compute_indicators(
            &records,
            (0, 1000),
            1000,
            &IndicatorFilters { camera_id: Some("cam1".into()), ..Default::default() },
            &CellCatalog::new(),
        )
        .unwrap();
        assert!(filtered.buckets[0].total_visitors <= all.buckets[0].total_visitors);
        assert!(filtered.buckets[0].interaction_count < all.buckets[0].interaction_count);
    }

    #[test]
    fn conversion_requires_feed() {
        let records = stored(vec![
            (0..100)
                .map(|i| visit("cam1", i, 0, 1000, vec![]))
                .collect::<Vec<_>>(),
        ]
        .concat());
        let filters = IndicatorFilters::default();
        assert_eq!(
            sales_conversion(&records, (0, 2000), &filters, None).unwrap(),
            Conversion::Unavailable
        );
        match sales_conversion(&records, (0, 2000), &filters, Some(20)).unwrap() {
            Conversion::Ratio(r) => assert!((r - 0.2).abs() < 1e-12),
            other => panic!("unexpected {:?}", other),
        }
    }
}
