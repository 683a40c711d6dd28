//! One function per subcommand; each returns the process exit code.

use std::time::Instant;

use hardy_core::decompose::atomic_decomposition_with;
use hardy_core::operators::{extension_check_on, uniform_atom_bound};
use hardy_core::report::pass_fail;
use hardy_core::whitney::{check_family, distance_to_complement, nested_stats, whitney_decompose, WhitneyFamily};
use hardy_core::{KvDoc, Table};

use crate::output::{header, OutDir};
use crate::{exit, suite, CliError, RunConfig};

fn verdict(ok: bool) -> u8 {
    if ok {
        exit::PASS
    } else {
        exit::VIOLATION
    }
}

fn cube_table(fam: &WhitneyFamily) -> Table {
    let g = fam.grid();
    let mut t = Table::new(["k", "level", "side", "side_cells", "lower_x", "lower_y", "dist"]);
    for (k, c) in fam.cubes().iter().enumerate() {
        let lo = c.lower(g);
        t.push_row([
            k.to_string(),
            c.level.to_string(),
            format!("{:e}", c.side(g)),
            fam.side_cells(k).to_string(),
            format!("{:e}", lo[0]),
            format!("{:e}", lo[1]),
            format!("{:e}", distance_to_complement(fam.region(), c)),
        ]);
    }
    t
}

pub fn cmd_whitney(cfg: &RunConfig) -> Result<u8, CliError> {
    let hash = cfg.hash()?;
    let grid = cfg.grid()?;
    let region = cfg.whitney.region.build(grid)?;
    let fam = whitney_decompose(&region)?.with_epsilon(cfg.epsilon)?;
    let check = check_family(&fam);
    let mut report = header("whitney", &hash);
    report.extend_prefixed("family", &check.to_kv());
    let mut ok = check.all_pass();
    let out = OutDir::create(&cfg.out)?;
    out.write("whitney_family.txt", &fam.to_record())?;
    out.write("whitney_cubes.csv", &cube_table(&fam).render())?;
    if let Some(inner) = &cfg.whitney.inner {
        let inner = inner.build(grid)?;
        let fine = whitney_decompose(&inner)?.with_epsilon(cfg.epsilon)?;
        let inner_check = check_family(&fine);
        let stats = nested_stats(&fam, &fine)?;
        report.extend_prefixed("inner", &inner_check.to_kv());
        report.extend_prefixed("nested", &stats.to_kv());
        ok &= inner_check.all_pass() && stats.all_pass();
        out.write("whitney_inner_family.txt", &fine.to_record())?;
        out.write("nested.csv", &stats.per_fine.render())?;
    }
    report.push("pass", pass_fail(ok));
    out.write("whitney_report.txt", &report.render())?;
    Ok(verdict(ok))
}

pub fn cmd_decompose(cfg: &RunConfig) -> Result<u8, CliError> {
    let hash = cfg.hash()?;
    let grid = cfg.grid()?;
    let fam = cfg.family(grid)?;
    let f = cfg.input_function(grid)?;
    let t = Instant::now();
    let d = atomic_decomposition_with(&f, cfg.p, cfg.s, &fam, &cfg.decompose_options())?;
    eprintln!("decompose: {:.2} s", t.elapsed().as_secs_f64());
    let floor_ok = d.relative_floor() <= cfg.tolerances.reconstruction;
    let ok = d.checks.invariants_pass() && d.lemma4.pass() && floor_ok;

    let mut manifest = header("decompose", &hash);
    manifest.extend_prefixed("decomposition", &d.manifest());
    manifest
        .push("floor_tolerance", cfg.tolerances.reconstruction)
        .push("floor", pass_fail(floor_ok))
        .push("pass", pass_fail(ok));
    let mut lemma4 = header("decompose", &hash);
    lemma4.extend_prefixed("lemma4", &d.lemma4.to_kv());

    let out = OutDir::create(&cfg.out)?;
    out.write_dir("decomposition", |dir| {
        d.write_dir(dir)?;
        std::fs::write(dir.join("manifest.txt"), manifest.render())?;
        Ok(())
    })?;
    out.write("reconstruction.csv", &d.error_table().render())?;
    out.write("lemma4.txt", &lemma4.render())?;
    out.write("decompose_report.txt", &manifest.render())?;
    Ok(verdict(ok))
}

pub fn cmd_operator_harness(cfg: &RunConfig) -> Result<u8, CliError> {
    let hash = cfg.hash()?;
    if cfg.harness.operators.is_empty() || cfg.harness.modes.is_empty() {
        return Err(CliError::config("[harness] needs at least one operator and one mode"));
    }
    let grid = cfg.grid()?;
    let fam = cfg.family(grid)?;
    let f = cfg.input_function(grid)?;
    let d = atomic_decomposition_with(&f, cfg.p, cfg.s, &fam, &cfg.decompose_options())?;
    let out = OutDir::create(&cfg.out)?;
    let mut summary = header("operator-harness", &hash);
    summary.push("terms", d.terms.len()).push("c_lambda", format!("{:e}", d.c_lambda()));
    let mut ok = true;
    for (n, op) in cfg.harness.operators.iter().enumerate() {
        let spec = cfg.operator(op, grid)?;
        for &mode in &cfg.harness.modes {
            let name = format!("{n:02}_{}_{mode}", op.label());
            let bound = uniform_atom_bound(&spec, cfg.p, cfg.harness.trials, cfg.seed, mode, &fam)?;
            let ext = extension_check_on(&spec, &f, &d, &fam, mode)?.with_tol(cfg.tolerances.harness);
            ok &= ext.pass;
            let mut report = header("operator-harness", &hash);
            report.push("operator", spec.name());
            report.extend_prefixed("random_atoms", &bound.to_kv());
            report.extend_prefixed("extension", &ext.to_kv());
            out.write(&format!("harness_{name}.txt"), &report.render())?;
            out.write(&format!("harness_{name}_trials.csv"), &bound.trial_table().render())?;
            out.write(&format!("harness_{name}_terms.csv"), &ext.trial_table().render())?;
            summary
                .push(format!("{name}.sup_atom_bound"), format!("{:e}", bound.sup_atom_bound))
                .push(format!("{name}.decomposition_sup"), format!("{:e}", ext.sup_atom_bound))
                .push(format!("{name}.pass"), pass_fail(ext.pass));
        }
    }
    summary.push("pass", pass_fail(ok));
    out.write("harness_report.txt", &summary.render())?;
    Ok(verdict(ok))
}

pub fn cmd_verify_all(cfg: &RunConfig) -> Result<u8, CliError> {
    let hash = cfg.hash()?;
    let out = OutDir::create(&cfg.out)?;
    let mut echo = cfg.resolved()?;
    echo.out = Default::default();
    out.write("config.toml", &echo.to_toml())?;
    let criteria = suite::run(cfg, |c, dt| {
        eprintln!("criterion {} ({}): {} in {:.1} s", c.id, c.title, c.status(), dt.as_secs_f64());
    })?;
    let mut report = header("verify-all", &hash);
    report.push("seed", cfg.seed);
    for c in &criteria {
        report.push(format!("criterion.{}", c.id), c.status());
        report.push(format!("criterion.{}.title", c.id), c.title);
        report.push(format!("criterion.{}.summary", c.id), &c.summary);
    }
    for c in &criteria {
        let mut d = KvDoc::new();
        d.extend_prefixed(&format!("criterion.{}", c.id), &c.details);
        for (k, v) in d.entries() {
            report.push(k.clone(), v);
        }
        for (name, table) in &c.tables {
            out.write(name, &table.render())?;
        }
    }
    let ok = criteria.iter().all(|c| c.pass != Some(false));
    report.push("pass", pass_fail(ok));
    out.write("verify_report.txt", &report.render())?;
    Ok(verdict(ok))
}
