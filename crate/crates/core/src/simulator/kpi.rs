use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::classify::{classify_action, ActionClass};
use super::{DayResult, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub measured_years: usize,
    pub warmup_years: usize,
    pub seed: u64,
    /// Mean yearly reward including unmet-demand penalties.
    pub mean_profit_per_year: f64,
    /// Standard error of `mean_profit_per_year` over measured years.
    pub se_profit: f64,
    /// Mean yearly grid revenue without penalties.
    pub mean_trade_profit: f64,
    /// Mean of `charged / k_plus` over days with charging, in percent.
    /// Zero when the electrolyzer never runs; see `electrolyzer_used`.
    pub electrolyzer_utilization_pct: f64,
    pub electrolyzer_used: bool,
    /// Mean of `charged / k_plus` over all days, in percent.
    pub electrolyzer_utilization_all_days_pct: f64,
    /// Days on which the cable runs at capacity, in percent.
    pub pct_time_congestion: f64,
    pub pct_time_congestion_buying: f64,
    pub pct_time_congestion_selling: f64,
    /// Days with unmet demand, in percent.
    pub pct_unmet_demand: f64,
    pub mean_unmet_per_year: f64,
    pub mean_spilled_per_year: f64,
    pub mean_inventory_by_day: Vec<f64>,
    /// Fraction of years with a buying congestion on each day.
    pub congestion_buy_by_day: Vec<f64>,
    pub congestion_sell_by_day: Vec<f64>,
    /// Per day, the frequency of each [`ActionClass`] among that day's
    /// overage (first four) or shortage (last four) occurrences.
    pub action_class_freq_by_day: Vec<[f64; 8]>,
}

/// `(buying, selling)` congestion frequency for every day of the year.
pub fn congestion_trace(kpi: &KpiReport) -> Vec<(f64, f64)> {
    kpi.congestion_buy_by_day
        .iter()
        .zip(&kpi.congestion_sell_by_day)
        .map(|(b, s)| (*b, *s))
        .collect()
}

#[derive(Serialize)]
struct DailyRow<'a> {
    day: usize,
    metric: &'a str,
    value: f64,
}

/// Writes the per-day series of `kpi` in long format with columns
/// `day, metric, value` (1-based days).
pub fn write_daily_csv<W: Write>(out: W, kpi: &KpiReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for day in 0..kpi.mean_inventory_by_day.len() {
        let mut put = |metric: &str, value: f64| {
            w.serialize(DailyRow {
                day: day + 1,
                metric,
                value,
            })
        };
        put("mean_inventory", kpi.mean_inventory_by_day[day])?;
        put("congestion_buy", kpi.congestion_buy_by_day[day])?;
        put("congestion_sell", kpi.congestion_sell_by_day[day])?;
        for class in ActionClass::ALL {
            put(class.label(), kpi.action_class_freq_by_day[day][class.index()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub(super) struct Accumulator {
    pub yearly_profit: Vec<f64>,
    yearly_trade: Vec<f64>,
    days: u64,
    charge_days: u64,
    charge_ratio_sum: f64,
    unmet_days: u64,
    unmet_sum: f64,
    spilled_sum: f64,
    buy_cong: u64,
    sell_cong: u64,
    inventory: Vec<f64>,
    buy_by_day: Vec<u64>,
    sell_by_day: Vec<u64>,
    classes: Vec<[u64; 8]>,
    overage_days: Vec<u64>,
    shortage_days: Vec<u64>,
}

impl Accumulator {
    pub fn new(periods: usize) -> Self {
        Accumulator {
            yearly_profit: Vec::new(),
            yearly_trade: Vec::new(),
            days: 0,
            charge_days: 0,
            charge_ratio_sum: 0.0,
            unmet_days: 0,
            unmet_sum: 0.0,
            spilled_sum: 0.0,
            buy_cong: 0,
            sell_cong: 0,
            inventory: vec![0.0; periods],
            buy_by_day: vec![0; periods],
            sell_by_day: vec![0; periods],
            classes: vec![[0; 8]; periods],
            overage_days: vec![0; periods],
            shortage_days: vec![0; periods],
        }
    }

    pub fn record_day(&mut self, day: usize, d: &DayResult, cap_steps: i16, k_plus: f64, du: f64) {
        self.days += 1;
        if d.charged > 0.0 && k_plus > 0.0 {
            self.charge_days += 1;
            self.charge_ratio_sum += d.charged / k_plus;
        }
        if d.unmet > 0.0 {
            self.unmet_days += 1;
            self.unmet_sum += d.unmet;
        }
        self.spilled_sum += d.spilled;
        if d.steps != 0 && d.steps.abs() == cap_steps {
            if d.steps < 0 {
                self.buy_cong += 1;
                self.buy_by_day[day] += 1;
            } else {
                self.sell_cong += 1;
                self.sell_by_day[day] += 1;
            }
        }
        self.inventory[day] += d.x;
        if let Some(class) = classify_action(d.y_bar, d.u, du) {
            self.classes[day][class.index()] += 1;
            if class.is_overage() {
                self.overage_days[day] += 1;
            } else {
                self.shortage_days[day] += 1;
            }
        }
    }

    pub fn record_year(&mut self, profit: f64, trade: f64) {
        self.yearly_profit.push(profit);
        self.yearly_trade.push(trade);
    }

    pub fn merge(&mut self, o: &Accumulator) {
        self.yearly_profit.extend_from_slice(&o.yearly_profit);
        self.yearly_trade.extend_from_slice(&o.yearly_trade);
        self.days += o.days;
        self.charge_days += o.charge_days;
        self.charge_ratio_sum += o.charge_ratio_sum;
        self.unmet_days += o.unmet_days;
        self.unmet_sum += o.unmet_sum;
        self.spilled_sum += o.spilled_sum;
        self.buy_cong += o.buy_cong;
        self.sell_cong += o.sell_cong;
        for d in 0..self.inventory.len() {
            self.inventory[d] += o.inventory[d];
            self.buy_by_day[d] += o.buy_by_day[d];
            self.sell_by_day[d] += o.sell_by_day[d];
            self.overage_days[d] += o.overage_days[d];
            self.shortage_days[d] += o.shortage_days[d];
            for k in 0..8 {
                self.classes[d][k] += o.classes[d][k];
            }
        }
    }

    pub fn finish(self, sim: &SimConfig, k_plus: f64) -> KpiReport {
        let n = self.yearly_profit.len() as f64;
        let mean = self.yearly_profit.iter().sum::<f64>() / n;
        let se = if n > 1.0 {
            let var = self.yearly_profit.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            f64::NAN
        };
        let days = self.days as f64;
        let pct = |k: u64| 100.0 * k as f64 / days;
        let class_freq = self
            .classes
            .iter()
            .enumerate()
            .map(|(d, counts)| {
                let mut f = [0.0; 8];
                for class in ActionClass::ALL {
                    let denom = if class.is_overage() {
                        self.overage_days[d]
                    } else {
                        self.shortage_days[d]
                    };
                    if denom > 0 {
                        f[class.index()] = counts[class.index()] as f64 / denom as f64;
                    }
                }
                f
            })
            .collect();
        let used = self.charge_days > 0 && k_plus > 0.0;
        KpiReport {
            measured_years: self.yearly_profit.len(),
            warmup_years: sim.warmup_years,
            seed: sim.seed,
            mean_profit_per_year: mean,
            se_profit: se,
            mean_trade_profit: self.yearly_trade.iter().sum::<f64>() / n,
            electrolyzer_utilization_pct: if used {
                100.0 * self.charge_ratio_sum / self.charge_days as f64
            } else {
                0.0
            },
            electrolyzer_used: used,
            electrolyzer_utilization_all_days_pct: 100.0 * self.charge_ratio_sum / days,
            pct_time_congestion: pct(self.buy_cong + self.sell_cong),
            pct_time_congestion_buying: pct(self.buy_cong),
            pct_time_congestion_selling: pct(self.sell_cong),
            pct_unmet_demand: pct(self.unmet_days),
            mean_unmet_per_year: self.unmet_sum / n,
            mean_spilled_per_year: self.spilled_sum / n,
            mean_inventory_by_day: self.inventory.iter().map(|s| s / n).collect(),
            congestion_buy_by_day: self.buy_by_day.iter().map(|&k| k as f64 / n).collect(),
            congestion_sell_by_day: self.sell_by_day.iter().map(|&k| k as f64 / n).collect(),
            action_class_freq_by_day: class_freq,
        }
    }
}
