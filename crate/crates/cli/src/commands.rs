use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ballot_geometry::clustering::{
    distance, distance_matrix, exact_k_medoids, exact_kemeny, k_medians, lloyd, pam, silhouette, Budget, Center, Clustering, DistanceSpec,
    Embedding, SearchOptions,
};
use ballot_geometry::graphs::{build_graph, GraphOptions, GraphVariant};
use ballot_geometry::ingest::{parse_blt, profile_stats};
use ballot_geometry::metrics::{disagreements, dist_b, dist_h, dist_hausdorff, dist_kp, expected_completion_swaps, CompletionMode};
use ballot_geometry::slates::{
    assign_ballots_to_slates, candidate_dissimilarity, simplex_map, slates_by_agglomeration, slates_by_centers, slates_by_simplex_objective,
    DissimilarityKind, Linkage, SlatePartition, SlateRule,
};
use ballot_geometry::sweep::{analyze_election, summarize, SweepOptions};
use ballot_geometry::synthetic::{benchmark_election, Benchmark};
use ballot_geometry::viz::{classical_mds, points_csv, profile_points, render_svg, simplex_csv, simplex_density, simplex_plane_points, SvgStyle};
use ballot_geometry::{BordaConvention, CandidateId, Exec, Profile};
use serde_json::{json, Value};

use crate::input::{load, parse_ballot, render_ballot, Input};
use crate::report::{to_json_string, write_out, Report};
use crate::{Algo, Cli, CliError, Command, GraphVariantArg, SlateMethodArg};

fn usage<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let exec = if cli.serial { Exec::Serial } else { Exec::Parallel };
    let mut inputs = Vec::new();
    let (report, failure) = dispatch(&cli.command, exec, &mut inputs)?;
    if cli.json {
        print!("{}", to_json_string(&report.json));
    } else {
        print!("{}", report.text);
    }
    if let Some(dir) = &cli.out {
        let config = json!({ "command": serde_json::to_value(&cli.command)?, "serial": cli.serial });
        write_out(dir, cli.command.name(), config, &inputs, &report)?;
    }
    match failure {
        Some(msg) => Err(CliError::Internal(msg).into()),
        None => Ok(()),
    }
}

fn open(path: &str, inputs: &mut Vec<Input>) -> anyhow::Result<Profile> {
    let input = load(path)?;
    let p = input.profile.clone();
    inputs.push(input);
    Ok(p)
}

fn dispatch(cmd: &Command, exec: Exec, inputs: &mut Vec<Input>) -> anyhow::Result<(Report, Option<String>)> {
    let report = match cmd {
        Command::Stats { input, top } => {
            let p = open(input, inputs)?;
            let stats = profile_stats(&p, *top);
            Report::new(stats.to_text(), serde_json::to_value(&stats)?)
        }
        Command::Distance { a, b, m, roster, metric, kp } => {
            let names = match (roster, m) {
                (Some(path), _) => open(path, inputs)?.names().to_vec(),
                (None, Some(m)) => usage(Profile::new(*m))?.names().to_vec(),
                (None, None) => return Err(CliError::Usage("distance needs --m or --roster".into()).into()),
            };
            let metric = metric.as_deref().map(|s| usage(s.parse::<DistanceSpec>())).transpose()?;
            distance_report(a, b, &names, metric, kp)?
        }
        Command::GraphCheck { m, variant } => return graph_check(*m, *variant, exec),
        Command::Cluster { input, k, metric, algo, embedding, seed, restarts, budget } => {
            let p = open(input, inputs)?;
            let spec = usage(usage(metric.parse::<DistanceSpec>())?.require_metric())?;
            let embedding: Embedding = usage(embedding.parse())?;
            let opts = SearchOptions { seed: *seed, restarts: *restarts, exec };
            let c = match algo {
                Algo::Pam => pam(&p, *k, spec, opts)?,
                Algo::Lloyd => lloyd(&p, *k, embedding, opts)?,
                Algo::Median => k_medians(&p, *k, embedding, opts)?,
                Algo::ExactMedoid => exact_k_medoids(&p, *k, spec, Budget { max_ops: *budget }, exec)?,
            };
            let silhouette_metric = match algo {
                Algo::Lloyd | Algo::Median => embedding.metric(),
                _ => spec,
            };
            let header = json!({ "algo": algo, "metric": spec.to_string(), "embedding": embedding_name(embedding) });
            clustering_report(&p, &c, header, silhouette_metric, exec)?
        }
        Command::Kemeny { input, k, metric, budget } => {
            let p = open(input, inputs)?;
            let spec = usage(metric.parse::<DistanceSpec>())?;
            let c = exact_kemeny(&p, *k, spec, Budget { max_ops: *budget }, exec)?;
            clustering_report(&p, &c, json!({ "algo": "kemeny", "metric": spec.to_string() }), spec, exec)?
        }
        Command::Slates { input, k, method, linkage, dissim, rule } => {
            let p = open(input, inputs)?;
            let s = build_slates(&p, *k, *method, linkage, dissim.as_deref(), exec)?;
            let rule: SlateRule = usage(rule.parse())?;
            slates_report(&p, &s, rule)?
        }
        Command::Simplex { input, k, method, linkage } => {
            let p = open(input, inputs)?;
            let s = build_slates(&p, *k, *method, linkage, None, exec)?;
            simplex_report(&p, &s)?
        }
        Command::Mds { input, metric, k, seed } => {
            let p = open(input, inputs)?;
            let spec = usage(metric.parse::<DistanceSpec>())?;
            let dm = distance_matrix(&p, spec, exec)?;
            let coords = classical_mds(&dm)?;
            let keys: Option<Vec<String>> = match k {
                Some(k) => {
                    let c = pam(&p, *k, spec, SearchOptions { seed: *seed, restarts: 4, exec })?;
                    Some(c.assignment.iter().map(|a| format!("cluster {}", a + 1)).collect())
                }
                None => None,
            };
            let points = profile_points(&p, &coords, keys.as_deref())?;
            let csv = points_csv(&points)?;
            Report::new(csv.clone(), json!({ "metric": spec.to_string(), "points": points }))
                .with_file("mds.csv", csv)
                .with_file("mds.svg", render_svg(&points, &SvgStyle::default()))
        }
        Command::Synth { family, p, seed } => {
            let family = usage(Benchmark::from_name(family, *p))?;
            let profile = benchmark_election(family, *seed, exec)?;
            let text = profile.to_text();
            Report::new(text.clone(), json!({ "family": family.to_string(), "seed": seed, "voters": profile.voter_count(), "profile": text }))
                .with_file("profile.txt", text)
        }
        Command::CorpusSweep { dir, seed, restarts, budget } => {
            corpus_sweep(dir, SweepOptions { seed: *seed, restarts: *restarts, budget: Budget { max_ops: *budget }, exec })?
        }
    };
    Ok((report, None))
}

fn embedding_name(e: Embedding) -> &'static str {
    match e {
        Embedding::BordaPessimistic => "borda",
        Embedding::BordaAveraged => "borda-avg",
        Embedding::HeadToHead => "h2h",
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn distance_report(a: &str, b: &str, names: &[String], metric: Option<DistanceSpec>, kp: &[f64]) -> anyhow::Result<Report> {
    let x = parse_ballot(a, names)?;
    let y = parse_ballot(b, names)?;
    let d = disagreements(&x, &y)?;
    let dh = dist_h(&x, &y)?.to_f64();
    let db = dist_b(&x, &y, BordaConvention::Pessimistic)?.to_f64();
    let db_avg = dist_b(&x, &y, BordaConvention::Averaged)?.to_f64();
    let haus = dist_hausdorff(&x, &y)?;
    let completion = expected_completion_swaps(&x, &y, CompletionMode::DEFAULT_EXACT).ok();
    let mut text = String::new();
    writeln!(text, "x: {}", render_ballot(&x, names))?;
    writeln!(text, "y: {}", render_ballot(&y, names))?;
    writeln!(text, "str: {}", d.strong)?;
    writeln!(text, "wk: {}", d.weak)?;
    writeln!(text, "wk_forward: {}", d.weak_forward)?;
    writeln!(text, "wk_backward: {}", d.weak_backward)?;
    writeln!(text, "d_H: {}", fmt_num(dh))?;
    writeln!(text, "d_B: {}", fmt_num(db))?;
    writeln!(text, "d_B_avg: {}", fmt_num(db_avg))?;
    let mut kp_values = Vec::new();
    for &p in kp {
        let v = usage(dist_kp(&x, &y, p))?;
        writeln!(text, "K^({p}): {}", fmt_num(v))?;
        kp_values.push(json!({ "p": p, "value": v }));
    }
    writeln!(text, "d_Haus: {haus}")?;
    if let Some(c) = completion {
        writeln!(text, "mean_completion_swaps: {}", fmt_num(c))?;
    }
    let mut json = json!({
        "x": render_ballot(&x, names),
        "y": render_ballot(&y, names),
        "str": d.strong,
        "wk": d.weak,
        "wk_forward": d.weak_forward,
        "wk_backward": d.weak_backward,
        "d_H": dh,
        "d_B": db,
        "d_B_avg": db_avg,
        "kp": kp_values,
        "d_Haus": haus,
        "mean_completion_swaps": completion,
    });
    if let Some(spec) = metric {
        let v = distance(&x, &y, spec)?;
        writeln!(text, "distance[{spec}]: {}", fmt_num(v))?;
        json["distance"] = json!({ "metric": spec.to_string(), "value": v });
    }
    Ok(Report::new(text, json))
}

fn graph_check(m: usize, variant: GraphVariantArg, exec: Exec) -> anyhow::Result<(Report, Option<String>)> {
    let variants: &[GraphVariant] = match variant {
        GraphVariantArg::Standard => &[GraphVariant::Basic, GraphVariant::Shortcut],
        GraphVariantArg::Basic => &[GraphVariant::Basic],
        GraphVariantArg::Shortcut => &[GraphVariant::Shortcut],
        GraphVariantArg::Generalized => &[GraphVariant::Generalized],
        GraphVariantArg::All => &[GraphVariant::Basic, GraphVariant::Shortcut, GraphVariant::Generalized],
    };
    let (mut text, mut rows, mut failed) = (String::new(), Vec::new(), Vec::new());
    for &v in variants {
        let (label, target) = match v {
            GraphVariant::Basic => ("basic", "d_H"),
            GraphVariant::Shortcut => ("shortcut", "d_B"),
            _ => ("generalized", "d_H"),
        };
        let g = build_graph(m, v, GraphOptions::default())?;
        let check = g.verify_path_metric(exec);
        let status = if check.passed() { "PASS" } else { "FAIL" };
        writeln!(
            text,
            "{label} graph, m={m}: {status} ({} nodes, {} edges, {} pairs vs {target}, {} mismatches)",
            g.node_count(),
            g.edge_count(),
            check.pairs_checked,
            check.mismatches.len()
        )?;
        for (a, b, got, want) in check.mismatches.iter().take(10) {
            writeln!(text, "  {} -> {}: path {got}, expected {want}", g.nodes()[*a].render(), g.nodes()[*b].render())?;
        }
        if !check.passed() {
            failed.push(label);
        }
        rows.push(json!({
            "graph": label, "m": m, "nodes": g.node_count(), "edges": g.edge_count(),
            "pairs": check.pairs_checked, "mismatches": check.mismatches.len(), "passed": check.passed(),
        }));
    }
    let failure = (!failed.is_empty()).then(|| format!("path metric mismatch on {} graph(s)", failed.join(", ")));
    Ok((Report::new(text, json!({ "checks": rows })), failure))
}

fn center_text(c: &Center, names: &[String]) -> String {
    match c {
        Center::Cast { ballot, .. } | Center::Ranking(ballot) => render_ballot(ballot, names),
        Center::Vector(_) => c.to_string(),
    }
}

fn clustering_report(p: &Profile, c: &Clustering, mut header: Value, silhouette_metric: DistanceSpec, exec: Exec) -> anyhow::Result<Report> {
    let names = p.names();
    let sil = if c.k >= 2 && p.num_types() > c.k { silhouette(p, c, silhouette_metric, exec).ok() } else { None };
    let sizes = c.sizes();
    let mut text = String::new();
    for key in ["algo", "metric", "embedding"] {
        if let Some(v) = header.get(key).and_then(Value::as_str) {
            writeln!(text, "{key}: {v}")?;
        }
    }
    writeln!(text, "k: {}", c.k)?;
    writeln!(text, "voters: {}", c.voter_count())?;
    writeln!(text, "cost: {}", fmt_num(c.cost))?;
    match sil {
        Some(s) => writeln!(text, "silhouette[{silhouette_metric}]: {s:.6}")?,
        None => writeln!(text, "silhouette: n/a")?,
    }
    let mut clusters = Vec::new();
    for (i, center) in c.centers.iter().enumerate() {
        writeln!(text, "cluster {}: size {} center {}", i + 1, sizes[i], center_text(center, names))?;
        clusters.push(json!({ "cluster": i + 1, "size": sizes[i], "center": center_text(center, names), "center_detail": center }));
    }
    let assignment: Vec<Value> = p
        .iter()
        .zip(&c.assignment)
        .map(|((b, n), a)| json!({ "ballot": render_ballot(b, names), "count": n, "cluster": a + 1 }))
        .collect();
    header["k"] = json!(c.k);
    header["voters"] = json!(c.voter_count());
    header["cost"] = json!(c.cost);
    header["silhouette"] = json!(sil);
    header["clusters"] = json!(clusters);
    header["assignment"] = json!(assignment);
    Ok(Report::new(text, header))
}

fn build_slates(p: &Profile, k: usize, method: SlateMethodArg, linkage: &str, dissim: Option<&str>, exec: Exec) -> anyhow::Result<SlatePartition> {
    let linkage: Linkage = usage(linkage.parse())?;
    let kind = |default: DissimilarityKind| -> Result<DissimilarityKind, CliError> { dissim.map(|d| usage(d.parse())).unwrap_or(Ok(default)) };
    Ok(match method {
        SlateMethodArg::Centers => {
            slates_by_centers(&candidate_dissimilarity(p, kind(DissimilarityKind::RankDifference(BordaConvention::Pessimistic))?, exec), k)?
        }
        SlateMethodArg::Agglom => slates_by_agglomeration(&candidate_dissimilarity(p, kind(DissimilarityKind::CompletionCloud)?, exec), k, linkage)?,
        SlateMethodArg::Simplex => slates_by_simplex_objective(p, k, exec)?,
    })
}

fn slate_names(s: &SlatePartition, names: &[String]) -> Vec<Vec<String>> {
    s.slates().iter().map(|sl| sl.iter().map(|c| names[c.0].clone()).collect()).collect()
}

fn slates_report(p: &Profile, s: &SlatePartition, rule: SlateRule) -> anyhow::Result<Report> {
    let names = p.names();
    let blocs = assign_ballots_to_slates(p, s, rule, BordaConvention::Pessimistic)?;
    let sizes = blocs.sizes();
    let mut text = String::new();
    writeln!(text, "slates: {}", s.render(None))?;
    writeln!(text, "named: {}", s.render(Some(names)))?;
    if let ballot_geometry::slates::SlateMethod::Centers { centers } = &s.method {
        let c: Vec<String> = centers.iter().map(|c| (c.0 + 1).to_string()).collect();
        writeln!(text, "centers: {}", c.join(","))?;
    }
    writeln!(text, "cost: {}", fmt_num(s.cost))?;
    for mg in &s.merge_history {
        let side = |v: &[CandidateId]| v.iter().map(|c| (c.0 + 1).to_string()).collect::<Vec<_>>().join(",");
        writeln!(text, "merge {{{}}} + {{{}}} at {:.6} -> {} slates", side(&mg.left), side(&mg.right), mg.distance, mg.slates_after)?;
    }
    for (i, n) in sizes.iter().enumerate() {
        writeln!(text, "bloc {}: {} voters", i + 1, n)?;
    }
    Ok(Report::new(text, json!({ "partition": s, "slate_names": slate_names(s, names), "bloc_sizes": sizes })))
}

fn simplex_report(p: &Profile, s: &SlatePartition) -> anyhow::Result<Report> {
    let k = s.k();
    let density = simplex_density(p, s);
    let csv = simplex_csv(&density, k)?;
    let mut mass = vec![0u64; k];
    let mut degenerate = 0;
    for (b, n) in p.iter() {
        let point = simplex_map(b, s);
        if point.degenerate {
            degenerate += n;
        } else {
            mass[point.nearest_vertex()] += n;
        }
    }
    let mut text = String::new();
    writeln!(text, "slates: {}", s.render(Some(p.names())))?;
    writeln!(text, "distinct points: {}", density.len())?;
    for (i, n) in mass.iter().enumerate() {
        writeln!(text, "nearest slate {}: {} voters", i + 1, n)?;
    }
    writeln!(text, "degenerate: {degenerate} voters")?;
    let json = json!({ "partition": s, "vertex_mass": mass, "degenerate": degenerate, "density": density.iter().map(|(pt, n)| json!({ "coords": pt.coords, "degenerate": pt.degenerate, "voters": n })).collect::<Vec<_>>() });
    let mut report = Report::new(text, json).with_file("simplex.csv", csv);
    if k == 2 || k == 3 {
        report = report.with_file("simplex.svg", render_svg(&simplex_plane_points(&density)?, &SvgStyle::default()));
    }
    Ok(report)
}

fn blt_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            blt_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("blt")) {
            out.push(path);
        }
    }
    Ok(())
}

fn corpus_sweep(dir: &Path, opts: SweepOptions) -> anyhow::Result<Report> {
    let mut files = Vec::new();
    blt_files(dir, &mut files).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?;
    let results = opts.exec.map_slice(&files, |path| -> Result<_, String> {
        let name = path.strip_prefix(dir).unwrap_or(path).to_string_lossy().into_owned();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{name}: {e}"))?;
        let profile = parse_blt(&text).and_then(|d| d.to_profile()).map_err(|e| format!("{name}: {e}"))?;
        analyze_election(&name, &profile, &opts).map_err(|e| format!("{name}: {e}"))
    });
    let (mut elections, mut skipped) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(e) => elections.push(e),
            Err(msg) => skipped.push(msg),
        }
    }
    if elections.is_empty() && !skipped.is_empty() {
        return Err(CliError::Parse(format!("no election could be analysed; first error: {}", skipped[0])).into());
    }
    let summary = summarize(&elections);
    let mut text = summary.to_text();
    writeln!(text, "skipped: {}", skipped.len())?;
    for s in &skipped {
        writeln!(text, "  {s}")?;
    }
    let per_election = serde_json::to_vec_pretty(&elections).context("serializing elections")?;
    Ok(Report::new(text, json!({ "summary": summary, "skipped": skipped, "elections": elections }))
        .with_file("elections.json", per_election))
}
