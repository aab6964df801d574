use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use seeqst::estimate::{
    delta_err, direct_estimate, distributions_from_records, fidelity_hermitian, fit_scaling,
    mle_estimate, MleConfig, Observation,
};
use seeqst::json::{
    CircuitDoc, CircuitsDoc, ElementDoc, ManifestDoc, MetricsDoc, PlanDoc, RecordDoc, RecordsDoc,
    ReportDoc, RngDoc, ScalingModelDoc, SubsetDoc,
};
use seeqst::verify::{run_all, VerifyOptions};
use seeqst::{
    build_local_circuits, build_subset_circuits, depth_report, observable_set, plan_subsets,
    run_plan, threshold_plan, Circuit, Connectivity, DensityMatrix, ElementIndex,
    MeasurementRecord, NoiseSpec, PlanVariant, ReferenceState, SubsetKey,
};

#[derive(Debug)]
pub enum CliError {
    Core(seeqst::Error),
    Io(String),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Usage(e) => write!(f, "{e}"),
        }
    }
}

impl From<seeqst::Error> for CliError {
    fn from(e: seeqst::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err<T>(context: &str, e: impl fmt::Display) -> CliResult<T> {
    Err(CliError::Io(format!("{context}: {e}")))
}

fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    if let Err(e) = fs::create_dir_all(dir) {
        return io_err(&format!("creating {}", dir.display()), e);
    }
    let path = dir.join(name);
    let body = match serde_json::to_string_pretty(value) {
        Ok(b) => b,
        Err(e) => return io_err(&format!("serializing {name}"), e),
    };
    if let Err(e) = fs::write(&path, body + "\n") {
        return io_err(&format!("writing {}", path.display()), e);
    }
    Ok(path)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let body = match fs::read_to_string(path) {
        Ok(b) => b,
        Err(e) => return io_err(&format!("reading {}", path.display()), e),
    };
    match serde_json::from_str(&body) {
        Ok(v) => Ok(v),
        Err(e) => io_err(&format!("parsing {}", path.display()), e),
    }
}

/// Accept either a file path or a directory containing `default_name`.
fn resolve_input(path: &str, default_name: &str) -> PathBuf {
    let p = PathBuf::from(path);
    if p.is_dir() {
        p.join(default_name)
    } else {
        p
    }
}

fn parse_elements(spec: &str, n_qubits: usize) -> CliResult<Vec<ElementIndex>> {
    let body = if let Some(file) = spec.strip_prefix('@') {
        match fs::read_to_string(file) {
            Ok(b) => b.lines().collect::<Vec<_>>().join(","),
            Err(e) => return io_err(&format!("reading element file {file}"), e),
        }
    } else {
        spec.to_string()
    };
    let mut elements = Vec::new();
    for token in body.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let Some((row, col)) = token.split_once(':') else {
            return Err(CliError::Usage(format!(
                "element {token:?} is not row:col"
            )));
        };
        let row: usize = row
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad row in {token:?}")))?;
        let col: usize = col
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad col in {token:?}")))?;
        elements.push(ElementIndex::new(row, col, n_qubits)?);
    }
    if elements.is_empty() {
        return Err(CliError::Usage("no elements given".into()));
    }
    Ok(elements)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_plan(
    n_qubits: usize,
    elements: Option<&str>,
    full: bool,
    variant: &str,
    connectivity: &str,
    threshold: Option<f64>,
    diagonal: Option<&str>,
    out: &str,
) -> CliResult<i32> {
    if full && elements.is_some() {
        return Err(CliError::Usage(
            "--full conflicts with --elements; pick one".into(),
        ));
    }
    if !full && elements.is_none() {
        return Err(CliError::Usage("give --elements or --full".into()));
    }
    let variant_enum = match variant {
        "seeqst" => PlanVariant::Seeqst,
        _ => PlanVariant::Local,
    };
    let schedule = match connectivity {
        "all-to-all" => Connectivity::AllToAll,
        _ => Connectivity::Chain,
    };

    let requested: Vec<ElementIndex> = match elements {
        Some(spec) => parse_elements(spec, n_qubits)?,
        None => (0..1usize << n_qubits)
            .flat_map(|r| (0..1usize << n_qubits).map(move |c| (r, c)))
            .map(|(r, c)| ElementIndex::new(r, c, n_qubits))
            .collect::<seeqst::Result<_>>()?,
    };

    let mut keys = plan_subsets(&requested)?;
    if let Some(t) = threshold {
        let Some(diag_file) = diagonal else {
            return Err(CliError::Usage("--threshold requires --diagonal <file>".into()));
        };
        let populations: Vec<f64> = read_json(Path::new(diag_file))?;
        keys = threshold_plan(&populations, &requested, t)?;
    }

    let mut circuits: Vec<Circuit> = Vec::new();
    for k in &keys {
        match variant_enum {
            PlanVariant::Seeqst => circuits.extend(build_subset_circuits(k, schedule)?),
            PlanVariant::Local => circuits.extend(build_local_circuits(k)),
        }
    }

    let element_specs: Option<Vec<String>> = elements.map(|_| {
        requested
            .iter()
            .map(|e| format!("{}:{}", e.row(), e.col()))
            .collect()
    });
    let manifest = ManifestDoc {
        command: "plan".into(),
        tool_version: tool_version(),
        n_qubits: Some(n_qubits),
        elements: element_specs,
        full: Some(full),
        variant: Some(variant.to_string()),
        connectivity: Some(connectivity.to_string()),
        threshold,
        diagonal_file: diagonal.map(str::to_string),
        outputs: vec!["plan.json".into(), "circuits.json".into()],
        ..Default::default()
    };
    let hash = manifest.hash();

    let plan_doc = PlanDoc {
        n_qubits,
        subsets: keys
            .iter()
            .map(|k| SubsetDoc {
                mask: k.mask(),
                observables: observable_set(k).iter().map(|p| p.to_string()).collect(),
            })
            .collect(),
        manifest_hash: Some(hash.clone()),
    };
    let circuits_doc = CircuitsDoc {
        n_qubits,
        variant: variant.to_string(),
        connectivity: connectivity.to_string(),
        circuits: circuits.iter().map(CircuitDoc::from_circuit).collect(),
        manifest_hash: Some(hash.clone()),
    };

    let dir = PathBuf::from(out);
    write_json(&dir, "plan.json", &plan_doc)?;
    write_json(&dir, "circuits.json", &circuits_doc)?;
    write_json(&dir, "manifest.json", &manifest)?;

    let max_layers = |conn: Connectivity| {
        keys.iter()
            .map(|k| depth_report(k, conn).two_qubit_layers)
            .max()
            .unwrap_or(0)
    };
    println!(
        "{} subsets, {} circuits ({} variant) -> {}",
        keys.len(),
        circuits.len(),
        variant,
        dir.display()
    );
    println!(
        "two-qubit layers, worst subset: chain {}, all-to-all {}, heavy-hex bound {}",
        max_layers(Connectivity::Chain),
        max_layers(Connectivity::AllToAll),
        max_layers(Connectivity::HeavyHexBound),
    );
    Ok(0)
}

fn load_circuits(path: &Path) -> CliResult<(CircuitsDoc, Vec<Circuit>)> {
    let doc: CircuitsDoc = read_json(path)?;
    let circuits = doc
        .circuits
        .iter()
        .map(CircuitDoc::to_circuit)
        .collect::<seeqst::Result<Vec<_>>>()?;
    Ok((doc, circuits))
}

pub fn cmd_run(
    plan: &str,
    state: &str,
    shots: u64,
    noise: &str,
    seed: u64,
    out: &str,
) -> CliResult<i32> {
    let circuits_path = resolve_input(plan, "circuits.json");
    let (doc, circuits) = load_circuits(&circuits_path)?;
    let noise_spec = NoiseSpec::parse(noise)?;
    let reference = ReferenceState::parse(state, doc.n_qubits)?;
    let prepared = reference.prepare()?;

    let records = run_plan(&prepared, &circuits, shots, &noise_spec, seed)?;

    let manifest = ManifestDoc {
        command: "run".into(),
        tool_version: tool_version(),
        n_qubits: Some(doc.n_qubits),
        state: Some(reference.as_string()),
        noise: Some(noise_spec.as_string()),
        shots: Some(shots),
        seed: Some(seed),
        plan: Some(circuits_path.display().to_string()),
        outputs: vec!["records.json".into()],
        ..Default::default()
    };
    let hash = manifest.hash();

    let records_doc = RecordsDoc {
        n_qubits: doc.n_qubits,
        shots,
        noise: noise_spec.as_string(),
        master_seed: seed,
        rng: RngDoc::default(),
        records: records.iter().map(RecordDoc::from_record).collect(),
        manifest_hash: Some(hash),
    };

    let dir = PathBuf::from(out);
    write_json(&dir, "records.json", &records_doc)?;
    write_json(&dir, "manifest.json", &manifest)?;
    println!(
        "{} records x {} shots on {} ({}) -> {}",
        records.len(),
        shots,
        reference.as_string(),
        noise_spec.as_string(),
        dir.display()
    );
    Ok(0)
}

pub struct EstimateRequest {
    pub records: String,
    pub circuits: Option<String>,
    pub method: String,
    pub truth: Option<String>,
    pub csv: Option<String>,
    pub max_iters: usize,
    pub learning_rate: f64,
    pub tolerance: f64,
    pub mle_seed: u64,
    pub minibatch: Option<usize>,
    pub out: String,
}

/// CNOT count of the subset's GHZ-basis circuits: M - 1 for M >= 1.
fn cnot_group(k: &SubsetKey) -> usize {
    k.block_size().saturating_sub(1)
}

pub fn cmd_estimate(req: EstimateRequest) -> CliResult<i32> {
    let records_path = resolve_input(&req.records, "records.json");
    let records_doc: RecordsDoc = read_json(&records_path)?;
    let circuits_path = match &req.circuits {
        Some(p) => resolve_input(p, "circuits.json"),
        None => records_path
            .parent()
            .unwrap_or(Path::new("."))
            .join("circuits.json"),
    };
    let (_, circuits) = load_circuits(&circuits_path)?;
    let records: Vec<MeasurementRecord> = records_doc
        .records
        .iter()
        .map(|r| r.to_record(records_doc.n_qubits))
        .collect();
    let n = records_doc.n_qubits;

    let truth: Option<DensityMatrix> = match &req.truth {
        Some(spec) => Some(ReferenceState::parse(spec, n)?.density_matrix()?),
        None => None,
    };
    if req.csv.is_some() && truth.is_none() {
        return Err(CliError::Usage("--csv requires --truth".into()));
    }

    let mut masks: Vec<usize> = records.iter().map(|r| r.subset_mask).collect();
    masks.sort_unstable();
    masks.dedup();
    let keys: Vec<SubsetKey> = masks
        .iter()
        .map(|&m| SubsetKey::new(m, n))
        .collect::<seeqst::Result<_>>()?;

    let mut estimates: BTreeMap<ElementIndex, Complex64> = BTreeMap::new();
    let mut fidelity_value: Option<f64> = None;
    let config: serde_json::Value;

    match req.method.as_str() {
        "direct" => {
            // subsets are independent; estimate them in parallel
            use rayon::prelude::*;
            let per_subset: Vec<seeqst::SubsetEstimate> = keys
                .par_iter()
                .map(|k| {
                    let relevant: Vec<MeasurementRecord> = records
                        .iter()
                        .filter(|r| r.subset_mask == k.mask())
                        .cloned()
                        .collect();
                    let dists = distributions_from_records(&circuits, &relevant)?;
                    direct_estimate(&dists, k)
                })
                .collect::<seeqst::Result<_>>()?;
            for est in per_subset {
                estimates.extend(est.values);
            }
            config = serde_json::json!({ "method": "direct" });
            if let Some(truth_rho) = &truth {
                // fidelity only when the whole matrix was estimated
                if keys.len() == 1usize << n {
                    let d = 1usize << n;
                    let mut assembled = nalgebra::DMatrix::<Complex64>::zeros(d, d);
                    for (e, v) in &estimates {
                        assembled[(e.row(), e.col())] = *v;
                    }
                    fidelity_value =
                        Some(fidelity_hermitian(&assembled, truth_rho.matrix())?);
                }
            }
        }
        _ => {
            let cfg = MleConfig {
                max_iters: req.max_iters,
                learning_rate: req.learning_rate,
                tolerance: req.tolerance,
                seed: req.mle_seed,
                minibatch: req.minibatch,
                ..Default::default()
            };
            let dists = distributions_from_records(&circuits, &records)?;
            let outcome = mle_estimate(&dists, n, &cfg)?;
            if !outcome.converged {
                eprintln!(
                    "warning: MLE stopped at the iteration cap ({} iterations)",
                    outcome.iterations
                );
            }
            for row in 0..1usize << n {
                for col in 0..1usize << n {
                    estimates.insert(
                        ElementIndex::new(row, col, n)?,
                        outcome.rho.entry(row, col),
                    );
                }
            }
            config = serde_json::json!({
                "method": "mle",
                "max_iters": cfg.max_iters,
                "learning_rate": cfg.learning_rate,
                "lr_decay": cfg.lr_decay,
                "tolerance": cfg.tolerance,
                "seed": cfg.seed,
                "minibatch": cfg.minibatch,
                "iterations": outcome.iterations,
                "converged": outcome.converged,
                "final_loss": outcome.final_loss,
            });
            if let Some(truth_rho) = &truth {
                fidelity_value = Some(seeqst::fidelity(&outcome.rho, truth_rho)?);
            }
        }
    }

    // element errors grouped by the CNOT count of the producing circuits
    let mut delta_by_group: BTreeMap<String, f64> = BTreeMap::new();
    let mut group_sizes: BTreeMap<usize, usize> = BTreeMap::new();
    if let Some(truth_rho) = &truth {
        let mut grouped: BTreeMap<usize, Vec<SubsetKey>> = BTreeMap::new();
        for k in &keys {
            grouped.entry(cnot_group(k)).or_default().push(*k);
            *group_sizes.entry(cnot_group(k)).or_default() += 1usize << n;
        }
        for (count, group) in &grouped {
            let err = delta_err(&estimates, truth_rho, group)?;
            delta_by_group.insert(count.to_string(), err);
        }
    }

    let manifest = ManifestDoc {
        command: "estimate".into(),
        tool_version: tool_version(),
        n_qubits: Some(n),
        records: Some(records_path.display().to_string()),
        circuits: Some(circuits_path.display().to_string()),
        method: Some(req.method.clone()),
        truth: req.truth.clone(),
        mle: Some(config.clone()),
        outputs: vec!["report.json".into()],
        ..Default::default()
    };
    let hash = manifest.hash();

    let report = ReportDoc {
        method: req.method.to_uppercase(),
        n_qubits: n,
        elements: estimates
            .iter()
            .map(|(e, v)| ElementDoc {
                row: e.row(),
                col: e.col(),
                re: v.re,
                im: v.im,
            })
            .collect(),
        metrics: MetricsDoc {
            fidelity: fidelity_value,
            delta_err_by_cnot_count: delta_by_group.clone(),
        },
        config,
        rng: serde_json::to_value(RngDoc::default()).expect("rng doc serializes"),
        manifest_hash: Some(hash),
    };

    let dir = PathBuf::from(&req.out);
    write_json(&dir, "report.json", &report)?;
    write_json(&dir, "manifest.json", &manifest)?;

    if let Some(csv_path) = &req.csv {
        let mut body = format!("# manifest_hash={}\n", report.manifest_hash.as_deref().unwrap_or(""));
        body.push_str("cnot_count,delta_err,n_elements\n");
        for (count, err) in &delta_by_group {
            let size = group_sizes[&count.parse::<usize>().unwrap_or(0)];
            body.push_str(&format!("{count},{err},{size}\n"));
        }
        let full_path = dir.join(csv_path);
        if let Err(e) = fs::write(&full_path, body) {
            return io_err(&format!("writing {}", full_path.display()), e);
        }
    }

    println!(
        "{} estimated {} elements{} -> {}",
        req.method.to_uppercase(),
        estimates.len(),
        fidelity_value
            .map(|f| format!(", fidelity {f:.5}"))
            .unwrap_or_default(),
        dir.display()
    );
    Ok(0)
}

pub struct ScalingRequest {
    pub variant: String,
    pub n_list: String,
    pub s_list: String,
    pub states: u64,
    pub subsets_per_m: usize,
    pub seed: u64,
    pub out: String,
}

fn parse_list<T: std::str::FromStr>(list: &str, what: &str) -> CliResult<Vec<T>> {
    let values: Result<Vec<T>, _> = list
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!("bad {what} list {list:?}"))),
    }
}

pub fn cmd_scaling(req: ScalingRequest) -> CliResult<i32> {
    let n_values: Vec<usize> = parse_list(&req.n_list, "qubit-count")?;
    let s_values: Vec<u64> = parse_list(&req.s_list, "shot-budget")?;
    if req.states == 0 || req.subsets_per_m == 0 {
        return Err(CliError::Usage("states and subsets-per-m must be positive".into()));
    }

    let manifest = ManifestDoc {
        command: "scaling".into(),
        tool_version: tool_version(),
        seed: Some(req.seed),
        variant: Some(req.variant.clone()),
        sweep: Some(serde_json::json!({
            "n_list": n_values,
            "s_list": s_values,
            "states": req.states,
            "subsets_per_m": req.subsets_per_m,
        })),
        outputs: vec!["observations.csv".into(), "scaling_model.json".into()],
        ..Default::default()
    };
    let hash = manifest.hash();

    let mut observations = Vec::new();
    let mut csv = format!("# manifest_hash={hash}\n");
    csv.push_str("n_qubits,block_size,shots,mean_delta_err,std_delta_err,trials\n");
    for &n in &n_values {
        for m in 0..=n {
            let masks: Vec<usize> = if m == 0 {
                vec![0]
            } else {
                (1..1usize << n)
                    .filter(|x: &usize| x.count_ones() as usize == m)
                    .take(req.subsets_per_m)
                    .collect()
            };
            for &s in &s_values {
                let mut errs = Vec::new();
                for state_idx in 0..req.states {
                    let reference = ReferenceState::RandomFullRank {
                        n_qubits: n,
                        seed: req.seed ^ (state_idx.wrapping_mul(0x9e37_79b9)),
                    };
                    let truth = reference.density_matrix()?;
                    let prepared = reference.prepare()?;
                    for &mask in &masks {
                        let k = SubsetKey::new(mask, n)?;
                        let circuits = match req.variant.as_str() {
                            "sq" => build_local_circuits(&k),
                            _ => build_subset_circuits(&k, Connectivity::Chain)?,
                        };
                        let shots = ((2 * s) / circuits.len() as u64).max(1);
                        let records = run_plan(
                            &prepared,
                            &circuits,
                            shots,
                            &NoiseSpec::None,
                            req.seed ^ state_idx,
                        )?;
                        let dists = distributions_from_records(&circuits, &records)?;
                        let est = direct_estimate(&dists, &k)?;
                        errs.push(delta_err(&est.values, &truth, &[k])?);
                    }
                }
                let mean = errs.iter().sum::<f64>() / errs.len() as f64;
                let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
                    / errs.len() as f64;
                csv.push_str(&format!(
                    "{n},{m},{s},{mean},{},{}\n",
                    var.sqrt(),
                    errs.len()
                ));
                observations.push(Observation {
                    n_qubits: n,
                    block_size: m,
                    shots: s as f64,
                    delta_err: mean.max(1e-12),
                });
            }
        }
    }

    let fit = fit_scaling(&observations)?;

    let model_doc = ScalingModelDoc {
        variant: req.variant.clone(),
        a0: fit.model.a0,
        a1: fit.model.a1,
        a2: fit.model.a2,
        b1: fit.model.b1,
        b2: fit.model.b2,
        residual_rms: fit.residual_rms,
        manifest_hash: Some(hash),
    };

    let dir = PathBuf::from(&req.out);
    if let Err(e) = fs::create_dir_all(&dir) {
        return io_err(&format!("creating {}", dir.display()), e);
    }
    let csv_path = dir.join("observations.csv");
    if let Err(e) = fs::write(&csv_path, csv) {
        return io_err(&format!("writing {}", csv_path.display()), e);
    }
    write_json(&dir, "scaling_model.json", &model_doc)?;
    write_json(&dir, "manifest.json", &manifest)?;

    println!(
        "{} observations; fit a0={:.4} a1={:.4} a2={:.4} b1={:.4} b2={:.4} (rms {:.2e}) -> {}",
        observations.len(),
        fit.model.a0,
        fit.model.a1,
        fit.model.a2,
        fit.model.b1,
        fit.model.b2,
        fit.residual_rms,
        dir.display()
    );
    Ok(0)
}

pub fn cmd_verify(max_n: usize, dense_n: usize, contract_n: usize) -> CliResult<i32> {
    let options = VerifyOptions {
        max_symplectic_n: max_n.clamp(1, 12),
        max_dense_n: dense_n.clamp(1, 6),
        max_contract_n: contract_n.clamp(1, 6),
        ..Default::default()
    };
    let outcomes = run_all(&options);
    let mut all_passed = true;
    for outcome in &outcomes {
        let verdict = if outcome.passed { "ok  " } else { "FAIL" };
        println!("{verdict} {}: {}", outcome.name, outcome.details);
        all_passed &= outcome.passed;
    }
    Ok(if all_passed { 0 } else { 1 })
}
