//! Parse a source file and turn it into canonical records.

use std::io::Read;

use atlas_core::records::{case_records, census_records, crosswalk_records, patterns_records, vaccination_records};
use atlas_core::Record;

use crate::ingest::{self, CdcColumns, IngestError};
use crate::report::{IngestReport, Source};

/// Parse `input` as `source` and convert the accepted rows.
pub fn parse_source<R: Read>(
    source: Source,
    input: R,
    cdc_columns: &CdcColumns,
) -> Result<(Vec<Record>, IngestReport), IngestError> {
    Ok(match source {
        Source::Nyt => {
            let p = ingest::parse_nyt(input)?;
            (case_records(&p.records), p.report)
        }
        Source::Cdc => {
            let p = ingest::parse_cdc(input, cdc_columns)?;
            (vaccination_records(&p.records), p.report)
        }
        Source::Census => {
            let p = ingest::parse_census(input)?;
            (census_records(&p.records), p.report)
        }
        Source::Crosswalk => {
            let p = ingest::parse_crosswalk(input)?;
            (crosswalk_records(&p.records), p.report)
        }
        Source::Patterns => {
            let p = ingest::parse_patterns(input)?;
            (patterns_records(&p.records), p.report)
        }
    })
}
