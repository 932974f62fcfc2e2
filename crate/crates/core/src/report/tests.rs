use super::*;
use crate::fleet::{DifficultyLabel, ExampleStats};
use crate::rank::{AggregateReport, MedianConvention, Metric};

fn report(name: &str, histogram: Vec<u64>, grim: Option<f64>, em: f64, f1: f64) -> AggregateReport {
    let n: u64 = histogram.iter().sum();
    AggregateReport {
        experiment: name.into(),
        n_examples: n as usize,
        n_secondary: (n - histogram[0]) as usize,
        em,
        f1,
        grim,
        grm: 0.0,
        grm_cap_biased: true,
        dgrm: None,
        gamma: 1.0,
        farr: None,
        mrr: 1.0,
        k: histogram.len() - 1,
        median_convention: MedianConvention::Grim,
        rank_histogram: histogram,
    }
}

fn attr_values(svg: &str, attr: &str) -> Vec<String> {
    let needle = format!(r#"{attr}=""#);
    svg.match_indices(&needle)
        .map(|(i, _)| {
            let rest = &svg[i + needle.len()..];
            rest[..rest.find('"').unwrap()].to_string()
        })
        .collect()
}

fn count(svg: &str, needle: &str) -> usize {
    svg.matches(needle).count()
}

fn table1_like() -> AggregateReport {
    let mut h = vec![0; 11];
    h[0] = 2;
    h[1] = 1;
    report("table1", h, Some(1.0), 66.67, 80.0)
}

#[test]
fn histogram_bars_and_grim_line() {
    let svg = gr_histogram_svg(&[table1_like()], "t").unwrap();
    assert_eq!(attr_values(&svg, "data-bucket"), ["0", "1"]);
    assert_eq!(attr_values(&svg, "data-pct"), ["66.67", "33.33"]);
    assert_eq!(attr_values(&svg, "data-grim"), ["1.00"]);
    assert_eq!(count(&svg, "stroke-dasharray"), 1);
    assert!(svg.contains(">10+<"));
}

#[test]
fn histogram_all_correct_has_no_grim_line() {
    let mut h = vec![0; 11];
    h[0] = 5;
    let svg = gr_histogram_svg(&[report("all", h, None, 100.0, 100.0)], "t").unwrap();
    assert_eq!(attr_values(&svg, "data-pct"), ["100.00"]);
    assert_eq!(count(&svg, "data-grim"), 0);
}

#[test]
fn histogram_two_series() {
    let mut h = vec![0; 11];
    h[0] = 1;
    h[3] = 1;
    h[10] = 2;
    let svg = gr_histogram_svg(&[table1_like(), report("b", h, Some(2.5), 25.0, 30.0)], "t").unwrap();
    assert_eq!(count(&svg, r#"class="grim""#), 2);
    assert_eq!(attr_values(&svg, "data-series").iter().filter(|s| *s == "1").count(), 4);
    assert!(gr_histogram_svg(&[], "t").is_err());
}

#[test]
fn figures_are_deterministic() {
    let a = gr_histogram_svg(&[table1_like()], "same").unwrap();
    let b = gr_histogram_svg(&[table1_like()], "same").unwrap();
    assert_eq!(a, b);
}

fn stat(mean: f64, std: f64, answerable: bool) -> ExampleStats {
    ExampleStats {
        example_id: format!("{mean}-{std}-{answerable}"),
        mean,
        std,
        answerable,
    }
}

#[test]
fn meanstd_points_and_axes() {
    let stats = vec![stat(0.0, 0.0, true), stat(0.0, 0.0, true), stat(5.0, 5.0, false)];
    let svg = meanstd_scatter_svg(&stats, &Coloring::Answerability, 10, "t").unwrap();
    assert_eq!(attr_values(&svg, "data-mean"), ["0.0000", "5.0000"]);
    assert_eq!(attr_values(&svg, "data-count"), ["2", "1"]);
    // the apex of the dome sits at the top of the y range
    assert!(svg.contains(r#"cx="360.00" cy="50.00""#));
    assert!(svg.contains("#2ca02c") && svg.contains("#d62728"));

    let origin = meanstd_scatter_svg(&[stat(0.0, 0.0, true)], &Coloring::Answerability, 10, "t").unwrap();
    assert_eq!(count(&origin, r#"class="point""#), 1);
    assert!(origin.contains(r#"cx="70.00" cy="380.00""#));
}

#[test]
fn meanstd_cluster_legend_has_four_entries() {
    let stats = vec![stat(0.0, 0.0, true), stat(9.0, 1.0, true)];
    let labels = vec![DifficultyLabel::AllCorrect, DifficultyLabel::Challenges];
    let svg = meanstd_scatter_svg(&stats, &Coloring::Cluster(labels), 10, "t").unwrap();
    assert_eq!(count(&svg, "legend-swatch"), 4);
    assert!(svg.contains("Polarized"));
    assert!(meanstd_scatter_svg(&stats, &Coloring::Cluster(vec![]), 10, "t").is_err());
}

#[test]
fn fit_through_collinear_points() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    let ys = [3.0, 5.0, 7.0, 9.0];
    let f = linear_fit(&xs, &ys).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
    assert!((f.r.unwrap() - 1.0).abs() < 1e-12);
    assert!(f.band_half_width(2.5).unwrap() < 1e-9);
    assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    assert!(linear_fit(&[1.0], &[2.0]).is_err());
}

#[test]
fn band_matches_t_quantile() {
    // n = 5, df = 3: t(0.975, 3) = 3.182446305284263
    let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
    let ys = [0.1, 0.9, 2.2, 2.8, 4.1];
    let f = linear_fit(&xs, &ys).unwrap();
    let se = f.residual_se.unwrap();
    let want = 3.182446305284263 * se * (1.0 / 5.0 + (4.0 - 2.0f64).powi(2) / 10.0).sqrt();
    assert!((f.band_half_width(4.0).unwrap() - want).abs() < 1e-9);
}

#[test]
fn metric_scatter_two_points() {
    let r1 = report("a", vec![1, 0], None, 60.0, 70.0);
    let r2 = report("b", vec![1, 0], None, 80.0, 86.0);
    let (svg, fit) = metric_scatter_svg(&[r1.clone(), r2], Metric::Em, Metric::F1, true, "t").unwrap();
    let fit = fit.unwrap();
    assert!((fit.predict(60.0) - 70.0).abs() < 1e-9 && (fit.predict(80.0) - 86.0).abs() < 1e-9);
    assert!(fit.residual_se.is_none());
    assert_eq!(count(&svg, r#"class="band""#), 0);
    assert!(svg.contains("r = 1.00"));
    assert!(metric_scatter_svg(&[r1.clone()], Metric::Em, Metric::F1, true, "t").is_err());
    assert!(metric_scatter_svg(&[r1], Metric::Em, Metric::F1, false, "t").is_ok());
}

fn log(f1: &[f64], grim: Option<f64>) -> Vec<TrainingLogEntry> {
    f1.iter()
        .enumerate()
        .map(|(i, &f)| TrainingLogEntry {
            step: 100 * (i as u64 + 1),
            em: f - 5.0,
            f1: f,
            grim,
        })
        .collect()
}

#[test]
fn training_best_step_marker() {
    let svg = training_curves_svg(&log(&[50.0, 60.0, 70.0], None), "t").unwrap();
    assert_eq!(attr_values(&svg, "data-step"), ["300"]);
    assert!(!svg.contains("GRIM"));

    let svg = training_curves_svg(&log(&[50.0, 80.0, 70.0, 80.0], Some(1.5)), "t").unwrap();
    assert_eq!(attr_values(&svg, "data-step"), ["200"]);
    assert!(svg.contains(r#"data-series="GRIM""#));

    assert!(training_curves_svg(&log(&[50.0], None), "t").is_err());
    let mut bad = log(&[1.0, 2.0], None);
    bad[1].step = bad[0].step;
    assert!(training_curves_svg(&bad, "t").is_err());
}

#[test]
fn training_log_formats() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("log.csv");
    std::fs::write(&csv, "step,em,f1,grim\n100,50,60,\n200,55,65,1.5\n").unwrap();
    let entries = load_training_log(&csv).unwrap();
    assert_eq!(entries[0].grim, None);
    assert_eq!(entries[1].grim, Some(1.5));

    let jsonl = dir.path().join("log.jsonl");
    std::fs::write(&jsonl, "{\"step\":1,\"em\":1,\"f1\":2}\n{\"step\":1,\"em\":1,\"f1\":2}\n").unwrap();
    assert!(load_training_log(&jsonl).is_err());
}

#[test]
fn figure_kinds_parse() {
    for kind in [
        FigureKind::GrHistogram,
        FigureKind::MeanstdScatter,
        FigureKind::MetricScatter,
        FigureKind::TrainingCurves,
    ] {
        assert_eq!(kind.to_string().parse::<FigureKind>().unwrap(), kind);
    }
}
