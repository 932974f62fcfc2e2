use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::svg::{linear_ticks, palette, Frame, Scale, Svg};
use crate::error::{Error, Result};
use crate::fleet::{DifficultyLabel, ExampleStats};
use crate::rank::{AggregateReport, Metric};

// ---------------------------------------------------------------- histogram

/// Rank histogram of several experiments with a dotted GRIM marker each.
/// Bars are percentages of all examples; zero-height bars are not drawn.
pub fn gr_histogram_svg(reports: &[AggregateReport], title: &str) -> Result<String> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Empty("histogram needs at least one report".into()))?;
    let k = first.k;
    if reports.iter().any(|r| r.k != k) {
        return Err(Error::InvalidArgument("reports use different K".into()));
    }
    let frame = Frame::default();
    let buckets = k + 1;
    let x = Scale::new(0.0, buckets as f64, frame.left, frame.right);
    let y = Scale::new(0.0, 100.0, frame.bottom, frame.top);
    let mut svg = Svg::new("gr_histogram", title);

    let ticks: Vec<(f64, String)> = (0..buckets)
        .map(|b| {
            let label = if b == k { format!("{k}+") } else { b.to_string() };
            (b as f64 + 0.5, label)
        })
        .collect();
    svg.axis(&x, frame.bottom, false, &ticks, "Golden Rank", 40.0);
    svg.axis(&y, frame.left, true, &linear_ticks(0.0, 100.0, 20.0, 0), "% of examples", -45.0);

    let slot = (x.map(1.0) - x.map(0.0)) * 0.8;
    let bar_w = slot / reports.len() as f64;
    for (s, r) in reports.iter().enumerate() {
        let color = palette(s);
        for (b, pct) in r.histogram_percentages().into_iter().enumerate() {
            if r.rank_histogram[b] == 0 {
                continue;
            }
            let left = x.map(b as f64) + (x.map(1.0) - x.map(0.0)) * 0.1 + bar_w * s as f64;
            let top = y.map(pct);
            svg.rect(
                left,
                top,
                bar_w,
                frame.bottom - top,
                color,
                &format!(r#" class="bar" data-series="{s}" data-bucket="{b}" data-pct="{pct:.2}""#),
            );
        }
        if let Some(g) = r.grim {
            // rank r is centred in its bucket
            let gx = x.map(g + 0.5);
            svg.line(
                gx,
                frame.top,
                gx,
                frame.bottom,
                color,
                &format!(r#" stroke-dasharray="4 4" stroke-width="1.5" class="grim" data-series="{s}" data-grim="{g:.2}""#),
            );
        }
    }
    let legend: Vec<(String, String)> = reports
        .iter()
        .enumerate()
        .map(|(s, r)| {
            let grim = r.grim.map_or_else(|| "n/a".to_string(), |g| format!("{g:.2}"));
            (palette(s).to_string(), format!("{} (EM {:.2}, GRIM {grim})", r.experiment, r.em))
        })
        .collect();
    svg.legend(&frame, &legend);
    Ok(svg.finish())
}

// ---------------------------------------------------------------- mean/std

#[derive(Debug, Clone, PartialEq)]
pub enum Coloring {
    Answerability,
    /// One flag per stats row: did any experiment answer it correctly.
    EverCorrect(Vec<bool>),
    /// One label per stats row.
    Cluster(Vec<DifficultyLabel>),
}

const GREEN: &str = "#2ca02c";
const RED: &str = "#d62728";

fn label_color(l: DifficultyLabel) -> &'static str {
    match l {
        DifficultyLabel::AllCorrect => "#1a9850",
        DifficultyLabel::MostlyCorrect => "#d73027",
        DifficultyLabel::Polarized => "#4575b4",
        DifficultyLabel::Challenges => "#fdae61",
    }
}

/// Per-example (mean, std) scatter over fixed axes `[0, K] × [0, K/2]`.
/// Coincident points of the same group are drawn once, with a count.
pub fn meanstd_scatter_svg(stats: &[ExampleStats], coloring: &Coloring, k: u32, title: &str) -> Result<String> {
    let groups: Vec<(usize, &'static str)> = match coloring {
        Coloring::Answerability => stats
            .iter()
            .map(|s| if s.answerable { (0, GREEN) } else { (1, RED) })
            .collect(),
        Coloring::EverCorrect(flags) => {
            if flags.len() != stats.len() {
                return Err(Error::InvalidArgument("one ever-correct flag per example".into()));
            }
            flags
                .iter()
                .map(|&f| if f { (0, "#1f77b4") } else { (1, "#ff7f0e") })
                .collect()
        }
        Coloring::Cluster(labels) => {
            if labels.len() != stats.len() {
                return Err(Error::InvalidArgument("one cluster label per example".into()));
            }
            labels.iter().map(|&l| (l as usize, label_color(l))).collect()
        }
    };
    let legend: Vec<(String, String)> = match coloring {
        Coloring::Answerability => vec![
            (GREEN.into(), "answerable".into()),
            (RED.into(), "unanswerable".into()),
        ],
        Coloring::EverCorrect(_) => vec![
            ("#1f77b4".into(), "answered correctly at least once".into()),
            ("#ff7f0e".into(), "never answered correctly".into()),
        ],
        Coloring::Cluster(_) => [
            DifficultyLabel::AllCorrect,
            DifficultyLabel::MostlyCorrect,
            DifficultyLabel::Polarized,
            DifficultyLabel::Challenges,
        ]
        .into_iter()
        .map(|l| (label_color(l).to_string(), l.to_string()))
        .collect(),
    };

    let frame = Frame::default();
    let kf = k as f64;
    let x = Scale::new(0.0, kf, frame.left, frame.right);
    let y = Scale::new(0.0, kf / 2.0, frame.bottom, frame.top);
    let mut svg = Svg::new("meanstd_scatter", title);
    svg.axis(&x, frame.bottom, false, &linear_ticks(0.0, kf, 1.0, 0), "GR mean", 40.0);
    svg.axis(&y, frame.left, true, &linear_ticks(0.0, kf / 2.0, 1.0, 0), "GR standard deviation", -45.0);

    // upper bound of the population std for values in [0, K]
    let dome: Vec<(f64, f64)> = (0..=100)
        .map(|i| {
            let m = kf * i as f64 / 100.0;
            (x.map(m), y.map((m * (kf - m)).max(0.0).sqrt()))
        })
        .collect();
    svg.polyline(&dome, "#bbbbbb", r#" stroke-dasharray="3 3" class="bound""#);

    let mut points: BTreeMap<(usize, i64, i64), (f64, f64, &str, usize)> = BTreeMap::new();
    for (s, (g, color)) in stats.iter().zip(groups) {
        let key = (g, (s.mean * 1e6).round() as i64, (s.std * 1e6).round() as i64);
        points.entry(key).or_insert((s.mean, s.std, color, 0)).3 += 1;
    }
    for ((g, _, _), (m, sd, color, count)) in &points {
        svg.circle(
            x.map(*m),
            y.map(*sd),
            2.5,
            color,
            &format!(r#" fill-opacity="0.6" class="point" data-group="{g}" data-mean="{m:.4}" data-std="{sd:.4}" data-count="{count}""#),
        );
    }
    svg.legend(&frame, &legend);
    Ok(svg.finish())
}

// ---------------------------------------------------------------- metric scatter

/// Ordinary least squares fit with its Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    /// `None` when y is constant.
    pub r: Option<f64>,
    pub mean_x: f64,
    pub sxx: f64,
    /// Residual standard error; `None` below three points.
    pub residual_se: Option<f64>,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// Half width of the 95% confidence band for the mean response at `x`.
    pub fn band_half_width(&self, x: f64) -> Option<f64> {
        let s = self.residual_se?;
        let t = StudentsT::new(0.0, 1.0, (self.n - 2) as f64).ok()?.inverse_cdf(0.975);
        Some(t * s * (1.0 / self.n as f64 + (x - self.mean_x).powi(2) / self.sxx).sqrt())
    }
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InvalidArgument("a fit needs at least two points".into()));
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("x values are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual_se = (n > 2).then(|| {
        let sse: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (sse / (n - 2) as f64).sqrt()
    });
    Ok(LinearFit {
        n,
        slope,
        intercept,
        r: pearson(xs, ys),
        mean_x,
        sxx,
        residual_se,
    })
}

fn padded_range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo { (hi - lo) * 0.08 } else { 1.0 };
    (lo - pad, hi + pad)
}

fn ticks_for(lo: f64, hi: f64) -> Vec<(f64, String)> {
    (0..=5)
        .map(|i| {
            let v = lo + (hi - lo) * i as f64 / 5.0;
            (v, format!("{v:.2}"))
        })
        .collect()
}

/// One point per experiment; with `fit`, the OLS line, a 95% band for the
/// mean response and Pearson r in the legend. Experiments lacking either
/// metric are skipped.
pub fn metric_scatter_svg(
    reports: &[AggregateReport],
    x_metric: Metric,
    y_metric: Metric,
    fit: bool,
    title: &str,
) -> Result<(String, Option<LinearFit>)> {
    let points: Vec<(&str, f64, f64)> = reports
        .iter()
        .filter_map(|r| Some((r.experiment.as_str(), r.metric(x_metric)?, r.metric(y_metric)?)))
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
    let fitted = if fit { Some(linear_fit(&xs, &ys)?) } else { None };

    let frame = Frame::default();
    let (x_lo, x_hi) = padded_range(&xs);
    let mut y_all = ys.clone();
    if let Some(f) = &fitted {
        for &xv in &[x_lo, x_hi] {
            let w = f.band_half_width(xv).unwrap_or(0.0);
            y_all.push(f.predict(xv) + w);
            y_all.push(f.predict(xv) - w);
        }
    }
    let (y_lo, y_hi) = if y_all.is_empty() { (0.0, 1.0) } else { padded_range(&y_all) };
    let (x_lo, x_hi) = if xs.is_empty() { (0.0, 1.0) } else { (x_lo, x_hi) };
    let x = Scale::new(x_lo, x_hi, frame.left, frame.right);
    let y = Scale::new(y_lo, y_hi, frame.bottom, frame.top);

    let mut svg = Svg::new("metric_scatter", title);
    svg.axis(&x, frame.bottom, false, &ticks_for(x.lo, x.hi), x_metric.name(), 40.0);
    svg.axis(&y, frame.left, true, &ticks_for(y.lo, y.hi), y_metric.name(), -50.0);

    let mut legend = vec![(palette(0).to_string(), "experiments".to_string())];
    if let Some(f) = &fitted {
        let samples: Vec<f64> = (0..=40).map(|i| x.lo + (x.hi - x.lo) * i as f64 / 40.0).collect();
        if f.residual_se.is_some() {
            let upper = samples.iter().map(|&v| (x.map(v), y.map(f.predict(v) + f.band_half_width(v).unwrap_or(0.0))));
            let lower = samples
                .iter()
                .rev()
                .map(|&v| (x.map(v), y.map(f.predict(v) - f.band_half_width(v).unwrap_or(0.0))));
            let poly: Vec<(f64, f64)> = upper.chain(lower).collect();
            svg.polygon(&poly, "#1f77b4", r#" fill-opacity="0.15" class="band""#);
        }
        let line: Vec<(f64, f64)> = [x.lo, x.hi].iter().map(|&v| (x.map(v), y.map(f.predict(v)))).collect();
        let r_text = f.r.map_or_else(|| "n/a".to_string(), |r| format!("{r:.2}"));
        svg.polyline(
            &line,
            "#d62728",
            &format!(r#" stroke-width="1.5" class="fit" data-slope="{:.6}" data-intercept="{:.6}" data-r="{r_text}""#, f.slope, f.intercept),
        );
        legend.push(("#d62728".into(), format!("OLS fit, r = {r_text}")));
        if f.residual_se.is_some() {
            legend.push(("#c6dbef".into(), "95% confidence band".into()));
        }
    }
    for (name, xv, yv) in &points {
        let (px, py) = (x.map(*xv), y.map(*yv));
        svg.circle(px, py, 4.0, palette(0), &format!(r#" class="point" data-x="{xv:.4}" data-y="{yv:.4}""#));
        svg.text(px + 6.0, py - 6.0, "start", name, r#" font-size="10""#);
    }
    svg.legend(&frame, &legend);
    Ok((svg.finish(), fitted))
}

// ---------------------------------------------------------------- training curves

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLogEntry {
    pub step: u64,
    pub em: f64,
    pub f1: f64,
    #[serde(default)]
    pub grim: Option<f64>,
}

/// Read a validation log: CSV with header `step,em,f1,grim` (blank GRIM
/// allowed) or, for `.jsonl`/`.json`, one entry per line.
pub fn load_training_log(path: impl AsRef<Path>) -> Result<Vec<TrainingLogEntry>> {
    let path = path.as_ref();
    let entries: Vec<TrainingLogEntry> = if path
        .extension()
        .is_some_and(|e| e == "jsonl" || e == "json")
    {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                serde_json::from_str(l).map_err(|e| Error::BadLine {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_>>()?
    } else {
        let mut r = csv::Reader::from_path(path)?;
        r.deserialize().collect::<std::result::Result<_, _>>()?
    };
    validate_log(&entries)?;
    Ok(entries)
}

fn validate_log(log: &[TrainingLogEntry]) -> Result<()> {
    if let Some(w) = log.windows(2).find(|w| w[1].step <= w[0].step) {
        return Err(Error::InvalidArgument(format!(
            "training steps must increase: {} then {}",
            w[0].step, w[1].step
        )));
    }
    Ok(())
}

/// Step with the highest F1; the earliest one on ties.
pub fn best_f1_step(log: &[TrainingLogEntry]) -> Option<u64> {
    log.iter()
        .fold(None::<&TrainingLogEntry>, |best, e| match best {
            Some(b) if b.f1 >= e.f1 => Some(b),
            _ => Some(e),
        })
        .map(|e| e.step)
}

/// EM and F1 on the left axis (0 to 100), GRIM on the right axis when any
/// validation reported one, and a marker at the best-F1 step.
pub fn training_curves_svg(log: &[TrainingLogEntry], title: &str) -> Result<String> {
    if log.len() < 2 {
        return Err(Error::InvalidArgument("training curves need at least two entries".into()));
    }
    validate_log(log)?;
    let frame = Frame::default();
    let (s0, s1) = (log[0].step as f64, log[log.len() - 1].step as f64);
    let x = Scale::new(s0, s1, frame.left, frame.right);
    let left = Scale::new(0.0, 100.0, frame.bottom, frame.top);
    let mut svg = Svg::new("training_curves", title);
    svg.axis(&x, frame.bottom, false, &ticks_for(s0, s1).into_iter().map(|(v, _)| (v, format!("{v:.0}"))).collect::<Vec<_>>(), "step", 40.0);
    svg.axis(&left, frame.left, true, &linear_ticks(0.0, 100.0, 20.0, 0), "EM / F1", -45.0);

    let em: Vec<(f64, f64)> = log.iter().map(|e| (x.map(e.step as f64), left.map(e.em))).collect();
    let f1: Vec<(f64, f64)> = log.iter().map(|e| (x.map(e.step as f64), left.map(e.f1))).collect();
    svg.polyline(&em, palette(0), r#" stroke-width="1.5" class="series" data-series="EM""#);
    svg.polyline(&f1, palette(1), r#" stroke-width="1.5" class="series" data-series="F1""#);
    let mut legend = vec![
        (palette(0).to_string(), "EM".to_string()),
        (palette(1).to_string(), "F1".to_string()),
    ];

    let grims: Vec<(u64, f64)> = log.iter().filter_map(|e| Some((e.step, e.grim?))).collect();
    if !grims.is_empty() {
        let hi = grims.iter().map(|g| g.1).fold(0.0, f64::max).ceil().max(1.0);
        let right = Scale::new(0.0, hi, frame.bottom, frame.top);
        svg.axis(&right, frame.right, true, &linear_ticks(0.0, hi, (hi / 5.0).max(0.5), 1), "GRIM", 45.0);
        let pts: Vec<(f64, f64)> = grims.iter().map(|(s, g)| (x.map(*s as f64), right.map(*g))).collect();
        svg.polyline(&pts, palette(2), r#" stroke-width="1.5" stroke-dasharray="6 3" class="series" data-series="GRIM""#);
        legend.push((palette(2).to_string(), "GRIM (right axis)".to_string()));
    }

    let best = best_f1_step(log).expect("non-empty log");
    let bx = x.map(best as f64);
    svg.line(
        bx,
        frame.top,
        bx,
        frame.bottom,
        "#555555",
        &format!(r#" stroke-dasharray="2 4" class="best-f1" data-step="{best}""#),
    );
    svg.text(bx + 4.0, frame.top + 12.0, "start", &format!("best F1 @ {best}"), "");
    svg.legend(&frame, &legend);
    Ok(svg.finish())
}
