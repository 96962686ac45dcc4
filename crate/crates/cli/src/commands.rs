//! The subcommands. Each writes its artifacts under the output directory and
//! prints a one-line summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use qcbtafqmc::afqmc::run_afqmc;
use qcbtafqmc::cbs::{self, reaction_barrier, regression, SeriesKind, SpeciesTable};
use qcbtafqmc::cbt::{fidelity_sweep, reconstruct_trial, TrialWavefunction};
use qcbtafqmc::energy::CompositeSetup;
use qcbtafqmc::exactdiag::{fci_ground_state, CIVector};
use qcbtafqmc::hamio::{extract_active_space, read_fcidump, ActiveSpaceSpec, Hamiltonian};
use qcbtafqmc::qsim::Statevector;

use crate::config::Loaded;
use crate::Failure;

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write(path, &text)
}

/// `stamp` merged with command-specific fields.
fn artifact(cfg: &Loaded, command: &str, fields: Value) -> Value {
    let mut out = cfg.stamp(command);
    if let (Value::Object(o), Value::Object(f)) = (&mut out, fields) {
        o.extend(f);
    }
    out
}

/// Full and active Hamiltonians plus the resolved active space.
fn hamiltonians(cfg: &Loaded) -> Result<(Hamiltonian, Hamiltonian, ActiveSpaceSpec), Failure> {
    let h = read_fcidump(cfg.fcidump()?)?;
    let spec = cfg.config.active_space.clone().unwrap_or_else(|| ActiveSpaceSpec::full(&h));
    let active = extract_active_space(&h, &spec)?;
    Ok((h, active, spec))
}

fn ground_state(h: &Hamiltonian) -> Result<(CIVector, f64), Failure> {
    let gs = fci_ground_state(h)?;
    let e = gs.energy.ok_or_else(|| Failure::numerical("exact solver returned no energy".into()))?;
    Ok((gs, e))
}

pub fn exact(cfg: &Loaded) -> Result<(), Failure> {
    let (_, h, spec) = hamiltonians(cfg)?;
    let (gs, energy) = ground_state(&h)?;
    let state_path = cfg.output_dir.join("state.txt");
    write(&state_path, &gs.to_text(&cfg.header("exact")))?;
    write_json(
        &cfg.output_dir.join("exact.json"),
        &artifact(
            cfg,
            "exact",
            json!({
                "fcidump": cfg.fcidump()?,
                "active_space": spec,
                "n_orb": h.n_orb,
                "n_elec": h.n_elec,
                "ms2": h.ms2,
                "dimension": gs.basis.len(),
                "energy": energy,
                "state_file": "state.txt",
            }),
        ),
    )?;
    println!("exact: E = {energy:.12} Ha over {} determinants -> {}", gs.basis.len(), state_path.display());
    Ok(())
}

pub fn tomograph(cfg: &Loaded, state: Option<PathBuf>) -> Result<(), Failure> {
    let path = match (state, &cfg.config.state_file) {
        (Some(p), _) => p,
        (None, Some(p)) => cfg.resolve(p),
        (None, None) => cfg.output_dir.join("state.txt"),
    };
    let v = CIVector::read(&path)?;
    let sv = Statevector::from_civector(&v, v.n_qubits())?;
    let source = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();

    if !cfg.config.cbt.sweep_shots.is_empty() {
        let seeds = cfg.sweep_seeds();
        let rows = fidelity_sweep(&sv, &cfg.config.cbt.sweep_shots, &seeds, cfg.config.cbt.r_max)?;
        let mut csv = String::new();
        for line in cfg.header("tomograph sweep") {
            let _ = writeln!(csv, "# {line}");
        }
        csv.push_str("shots,seed,r,total_measurements,fidelity,infidelity\n");
        for r in &rows {
            let total = r.total_measurements.map(|t| t.to_string()).unwrap_or_else(|| "inf".into());
            let _ = writeln!(csv, "{},{},{},{},{:.17e},{:.17e}", r.shots, r.seed, r.r, total, r.fidelity, 1.0 - r.fidelity);
        }
        let out = cfg.output_dir.join("sweep.csv");
        write(&out, &csv)?;
        println!("tomograph: {} sweep rows -> {}", rows.len(), out.display());
        return Ok(());
    }

    let trial = reconstruct_trial(&sv, &cfg.cbt(), &source)?;
    let fidelity = trial.fidelity(&sv)?;
    write(&cfg.output_dir.join("trial.txt"), &trial.to_text(&cfg.header("tomograph")))?;
    write_json(
        &cfg.output_dir.join("tomograph.json"),
        &artifact(
            cfg,
            "tomograph",
            json!({
                "state_file": path,
                "fidelity": fidelity,
                "provenance": trial.provenance,
                "trial_file": "trial.txt",
            }),
        ),
    )?;
    println!(
        "tomograph: R = {}, fidelity = {fidelity:.12}, measurements = {}",
        trial.provenance.r,
        trial.provenance.total_measurements.map(|t| t.to_string()).unwrap_or_else(|| "exact".into())
    );
    Ok(())
}

pub fn energy(cfg: &Loaded) -> Result<(), Failure> {
    let (h, _, spec) = hamiltonians(cfg)?;
    let setup = CompositeSetup::new(&h, &spec)?;
    let cbt = cfg.cbt();
    let afqmc = cfg.afqmc();
    let trial = setup.tomograph(&cbt)?;
    let result = setup.run_with_trial(&trial, &afqmc, cbt.seed)?;

    let header = cfg.header("energy");
    write(&cfg.output_dir.join("trial.txt"), &trial.to_text(&header))?;
    write(&cfg.output_dir.join("afqmc_full.csv"), &result.e_full_afqmc.to_csv(&header))?;
    write(&cfg.output_dir.join("afqmc_active.csv"), &result.e_act_afqmc.to_csv(&header))?;
    let summary = |t: &qcbtafqmc::afqmc::EnergyTrace| {
        json!({
            "mean": t.mean,
            "stderr": t.stderr,
            "trial_energy": t.trial_energy,
            "n_equilibration": t.n_equilibration,
            "blocks": t.block_energies.len(),
            "nonfinite_events": t.nonfinite_events,
        })
    };
    write_json(
        &cfg.output_dir.join("energy.json"),
        &artifact(
            cfg,
            "energy",
            json!({
                "active_space": spec,
                "e_act_ref": result.e_act_ref,
                "e_full_afqmc": summary(&result.e_full_afqmc),
                "e_act_afqmc": summary(&result.e_act_afqmc),
                "total": result.total,
                "total_stderr": result.total_stderr,
                "seeds": result.seeds,
                "cbt": cbt,
                "afqmc": afqmc,
                "trial": { "r": trial.provenance.r, "total_measurements": trial.provenance.total_measurements },
            }),
        ),
    )?;
    println!(
        "energy: total = {:.8} +/- {:.8} Ha (E_act_ref {:.8}, full {:.8}, active {:.8})",
        result.total, result.total_stderr, result.e_act_ref, result.e_full_afqmc.mean, result.e_act_afqmc.mean
    );
    Ok(())
}

pub fn afqmc(cfg: &Loaded, trial_path: Option<PathBuf>) -> Result<(), Failure> {
    let (_, h, _) = hamiltonians(cfg)?;
    let path = trial_path.or_else(|| cfg.config.trial_file.as_deref().map(|p| cfg.resolve(p)));
    let (trial, trial_source) = match &path {
        Some(p) => (TrialWavefunction::read(p)?, p.display().to_string()),
        None => {
            let (gs, _) = ground_state(&h)?;
            let sv = Statevector::from_civector(&gs, 2 * h.n_orb)?;
            (reconstruct_trial(&sv, &cfg.cbt(), "ground state")?, "tomographed ground state".into())
        }
    };
    let afqmc = cfg.afqmc();
    let trace = run_afqmc(&h, &trial, &afqmc)?;
    write(&cfg.output_dir.join("afqmc.csv"), &trace.to_csv(&cfg.header("afqmc")))?;
    write_json(
        &cfg.output_dir.join("afqmc.json"),
        &artifact(
            cfg,
            "afqmc",
            json!({
                "trial": trial_source,
                "r": trial.dets.len(),
                "afqmc": afqmc,
                "mean": trace.mean,
                "stderr": trace.stderr,
                "trial_energy": trace.trial_energy,
                "n_equilibration": trace.n_equilibration,
                "nonfinite_events": trace.nonfinite_events,
            }),
        ),
    )?;
    println!("afqmc: E = {:.8} +/- {:.8} Ha", trace.mean, trace.stderr);
    Ok(())
}

pub fn cbs(cfg: &Loaded) -> Result<(), Failure> {
    let c = &cfg.config.cbs;
    let table = match &c.csv {
        Some(p) => SpeciesTable::read(cfg.resolve(p))?,
        None => SpeciesTable::parse(cbs::tables::SPECIES_CSV)?,
    };
    let series = |species: &str, kind, cardinals: &Option<Vec<f64>>| match cardinals {
        Some(x) => table.series(species, kind, x),
        None => table.full_series(species, kind),
    };

    let mut species = serde_json::Map::new();
    let mut totals = BTreeMap::new();
    for name in &table.order {
        let mut entry = serde_json::Map::new();
        let mut total = Some(0.0);
        for (kind, scheme, cardinals, key) in [
            (SeriesKind::Reference, c.reference(), &c.reference_cardinals, "reference"),
            (SeriesKind::Correlation, c.correlation(), &c.correlation_cardinals, "correlation"),
        ] {
            match scheme {
                Some(s) => {
                    let r = s.extrapolate(&series(name, kind, cardinals)?)?;
                    total = total.map(|t| t + r.e_inf);
                    entry.insert(key.into(), serde_json::to_value(&r).expect("serializable"));
                }
                None => total = None,
            }
        }
        if let Some(t) = total {
            entry.insert("total".into(), json!(t));
            totals.insert(name.clone(), t);
        }
        species.insert(name.clone(), Value::Object(entry));
    }

    let mut reactions = serde_json::Map::new();
    for r in &c.reactions {
        let reactants: Vec<&str> = r.reactants.iter().map(String::as_str).collect();
        let b = reaction_barrier(&totals, &reactants, &r.transition_state, &r.product)?;
        reactions.insert(r.name.clone(), json!({ "barrier_kcal_mol": b.barrier, "reaction_kcal_mol": b.reaction }));
    }

    let mut fields = json!({
        "table": c.csv.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "bundled".into()),
        "reference_scheme": c.reference(),
        "correlation_scheme": c.correlation(),
        "species": species,
        "reactions": reactions,
    });
    let mut failed = 0;
    if c.regression {
        let cells = regression(&SpeciesTable::parse(cbs::tables::SPECIES_CSV)?)?;
        failed = cells.iter().filter(|c| !c.pass).count();
        fields["regression"] = json!({ "cells": cells, "failed": failed, "all_pass": failed == 0 });
    }
    let out = cfg.output_dir.join("cbs.json");
    write_json(&out, &artifact(cfg, "cbs", fields))?;
    if c.regression {
        println!("cbs: regression {} ({failed} failing cells) -> {}", if failed == 0 { "passed" } else { "FAILED" }, out.display());
    } else {
        println!("cbs: {} species -> {}", table.order.len(), out.display());
    }
    if failed > 0 {
        return Err(Failure::numerical(format!("{failed} regression cells outside tolerance")));
    }
    Ok(())
}
