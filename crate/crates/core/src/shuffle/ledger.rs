use std::io::Write;

use serde::Serialize;

use super::{Method, TransmissionRecord};
use crate::design::Design;
use crate::rational::{Rational, RationalJson};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundSummary {
    pub round: usize,
    pub method: Method,
    pub transmissions: usize,
    pub bits: u128,
}

/// Every transmission of a Shuffle run plus exact totals.
#[derive(Debug, Clone)]
pub struct ShuffleLedger {
    t_bits: usize,
    num_functions: usize,
    num_files: usize,
    records: Vec<TransmissionRecord>,
    rounds: Vec<RoundSummary>,
    redundant: usize,
}

impl ShuffleLedger {
    pub(crate) fn new(design: &Design, t_bits: usize) -> Self {
        Self {
            t_bits,
            num_functions: design.num_functions(),
            num_files: design.num_files(),
            records: Vec::new(),
            rounds: Vec::new(),
            redundant: 0,
        }
    }

    pub(crate) fn open_round(&mut self, round: usize, method: Method) {
        self.rounds.push(RoundSummary {
            round,
            method,
            transmissions: 0,
            bits: 0,
        });
    }

    pub(crate) fn push(&mut self, rec: TransmissionRecord) {
        let r = self.rounds.last_mut().expect("round opened");
        debug_assert_eq!(r.round, rec.round);
        r.transmissions += 1;
        r.bits += rec.bits as u128;
        self.records.push(rec);
    }

    pub(crate) fn add_redundant(&mut self, n: usize) {
        self.redundant += n;
    }

    pub fn records(&self) -> &[TransmissionRecord] {
        &self.records
    }

    /// Removes and returns a record; totals are adjusted. Used for
    /// fault-injection experiments.
    pub fn take_record(&mut self, index: usize) -> TransmissionRecord {
        let rec = self.records.remove(index);
        let r = self
            .rounds
            .iter_mut()
            .find(|r| r.round == rec.round)
            .expect("round exists");
        r.transmissions -= 1;
        r.bits -= rec.bits as u128;
        rec
    }

    pub fn rounds(&self) -> &[RoundSummary] {
        &self.rounds
    }

    pub fn t_bits(&self) -> usize {
        self.t_bits
    }

    /// Receptions that carried nothing new for the receiver.
    pub fn redundant_receptions(&self) -> usize {
        self.redundant
    }

    pub fn total_bits(&self) -> u128 {
        self.rounds.iter().map(|r| r.bits).sum()
    }

    /// Bits per round, exact.
    pub fn per_round_bits(&self) -> Vec<Rational> {
        self.rounds
            .iter()
            .map(|r| Rational::from_integer(r.bits as i128))
            .collect()
    }

    /// Bits per round in units of `T`.
    pub fn per_round_units(&self) -> Vec<Rational> {
        self.rounds
            .iter()
            .map(|r| Rational::new(r.bits as i128, self.t_bits as i128))
            .collect()
    }

    /// `sum bits / (Q N T)`.
    pub fn normalized_load(&self) -> Rational {
        let denom = (self.num_functions * self.num_files * self.t_bits) as i128;
        Rational::new(self.total_bits() as i128, denom)
    }

    /// One row per transmission: `round,method,sender,receivers,bits`, with
    /// receivers joined by `;`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "method", "sender", "receivers", "bits"])?;
        for r in &self.records {
            let receivers = r.receivers.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";");
            w.write_record([
                r.round.to_string(),
                r.method.to_string(),
                r.sender.to_string(),
                receivers,
                r.bits.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> LedgerSummary {
        LedgerSummary {
            t_bits: self.t_bits,
            rounds: self
                .rounds
                .iter()
                .zip(self.per_round_units())
                .map(|(r, units)| RoundJson {
                    round: r.round,
                    method: r.method,
                    transmissions: r.transmissions,
                    bits: r.bits.to_string(),
                    units_of_t: units.into(),
                })
                .collect(),
            total_bits: self.total_bits().to_string(),
            normalized_load: self.normalized_load().into(),
            redundant_receptions: self.redundant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundJson {
    pub round: usize,
    pub method: Method,
    pub transmissions: usize,
    pub bits: String,
    pub units_of_t: RationalJson,
}

/// JSON summary of a ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerSummary {
    pub t_bits: usize,
    pub rounds: Vec<RoundJson>,
    pub total_bits: String,
    pub normalized_load: RationalJson,
    pub redundant_receptions: usize,
}

#[cfg(test)]
mod tests {
    use crate::design::{Design, DesignParams};
    use crate::mapper;
    use crate::shuffle::{run_shuffle, ShuffleOptions, Strategy};

    #[test]
    fn csv_and_summary() {
        let d = Design::build(DesignParams::new(vec![2, 2], 1, 1).unwrap()).unwrap();
        let m = mapper::run_map(&d, 24, 0, Strategy::Default).unwrap();
        let (_, ledger) = run_shuffle(&d, &m, &ShuffleOptions::default()).unwrap();
        let mut buf = Vec::new();
        ledger.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "round,method,sender,receivers,bits");
        assert_eq!(lines.len(), 1 + ledger.records().len());
        assert!(lines[1].starts_with("1,A,"));

        let s = ledger.summary();
        assert_eq!(s.normalized_load.numerator, "5");
        assert_eq!(s.normalized_load.denominator, "12");
        assert_eq!(s.rounds.len(), 2);
        assert_eq!(s.rounds[0].units_of_t.numerator, "4");
    }

    #[test]
    fn take_record_adjusts_totals() {
        let d = Design::build(DesignParams::new(vec![2, 2], 1, 1).unwrap()).unwrap();
        let m = mapper::run_map(&d, 24, 0, Strategy::Default).unwrap();
        let (_, mut ledger) = run_shuffle(&d, &m, &ShuffleOptions::default()).unwrap();
        let before = ledger.total_bits();
        let rec = ledger.take_record(0);
        assert_eq!(ledger.total_bits() + rec.bits as u128, before);
        assert_eq!(ledger.rounds()[0].transmissions, 3);
    }
}
