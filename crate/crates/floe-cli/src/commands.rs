//! Subcommand implementations.

use crate::manifest::Manifest;
use crate::{Cli, Command};
use anyhow::{bail, Context, Result};
use floe_sim::config::ScenarioConfig;
use floe_sim::da::{self, DaScenario, ForecastModel, InflationCoefficients};
use floe_sim::integrate::{self, InflationNoise, SimulationState};
use floe_sim::output;
use floe_sim::seeds::{self, label};
use floe_sim::superfloe;
use floe_sim::uq;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

pub fn run(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.output_dir)
        .with_context(|| format!("creating output directory {:?}", cli.output_dir))?;
    let (config, overrides) = load_config(cli)?;
    for line in &overrides {
        println!("config: {line}");
    }

    let command_name = match &cli.command {
        Command::Init => "init",
        Command::Simulate { .. } => "simulate",
        Command::Reduce => "reduce",
        Command::Uq => "uq",
        Command::Inflate => "inflate",
        Command::Assimilate => "assimilate",
        Command::Score { .. } => "score",
        Command::Bench { .. } => "bench",
    };
    let mut manifest = Manifest::new(command_name, config.seed, cli.config.as_deref())?;
    manifest.threads = cli.threads;
    manifest.oracle = cli.oracle;

    match &cli.command {
        Command::Init => init(cli, &config, &mut manifest)?,
        Command::Simulate {
            contact_log,
            from_checkpoint,
        } => simulate(cli, &config, *contact_log, from_checkpoint.as_deref(), &mut manifest)?,
        Command::Reduce => reduce(cli, &config, &mut manifest)?,
        Command::Uq => uq_tables(cli, &config, &mut manifest)?,
        Command::Inflate => inflate(cli, &config, &mut manifest)?,
        Command::Assimilate => assimilate(cli, &config, &mut manifest)?,
        Command::Score { truth, estimate } => score(cli, truth, estimate, &mut manifest)?,
        Command::Bench { steps } => bench(cli, &config, *steps, &mut manifest)?,
    }

    manifest.write(&cli.output_dir)?;
    Ok(())
}

fn load_config(cli: &Cli) -> Result<(ScenarioConfig, Vec<String>)> {
    let (mut config, mut overrides) = match &cli.config {
        Some(path) => ScenarioConfig::parse_file(path)
            .with_context(|| format!("parsing config {path:?}"))?,
        None => (ScenarioConfig::default(), Vec::new()),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        overrides.push(format!("seed = {seed} (from --seed)"));
    }
    if let Some(steps) = cli.obs_interval_steps {
        config.obs_interval_steps = steps;
        overrides.push(format!(
            "da.observation_interval_steps = {steps} (from --obs-interval-steps)"
        ));
    }
    Ok((config, overrides))
}

fn create(dir: &Path, name: &str, manifest: &mut Manifest) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {path:?}"))?;
    manifest.record(&path);
    Ok(BufWriter::new(file))
}

fn init(cli: &Cli, config: &ScenarioConfig, manifest: &mut Manifest) -> Result<()> {
    let state = config.build_state()?;
    output::write_field_json(create(&cli.output_dir, "field.json", manifest)?, &state.field, 0.0)?;
    output::write_field_csv(create(&cli.output_dir, "field.csv", manifest)?, &state.field)?;
    println!(
        "initialized {} floes, concentration {:.3}",
        state.field.len(),
        state.field.concentration()
    );
    Ok(())
}

fn simulate(
    cli: &Cli,
    config: &ScenarioConfig,
    contact_log: bool,
    from_checkpoint: Option<&Path>,
    manifest: &mut Manifest,
) -> Result<()> {
    let mut state = match from_checkpoint {
        Some(path) => output::read_checkpoint(
            File::open(path).with_context(|| format!("opening checkpoint {path:?}"))?,
        )?,
        None => config.build_state()?,
    };
    let settings = config.step_settings(cli.oracle);
    let steps = (config.duration / config.dt).round() as u64;
    let inflation = InflationNoise::disabled();
    let mut rng = seeds::stream(config.seed, label::TRUTH);

    let mut trajectory =
        output::TrajectoryCsv::new(create(&cli.output_dir, "trajectory.csv", manifest)?)?;
    let mut log = if contact_log {
        Some(output::ContactLog::new(create(
            &cli.output_dir,
            "contacts.csv",
            manifest,
        )?)?)
    } else {
        None
    };

    trajectory.record(&state)?;
    for s in 0..steps {
        match log.as_mut() {
            Some(log) => {
                log.time = state.time;
                integrate::step_observed(
                    &mut state,
                    &settings,
                    &config.material,
                    &inflation,
                    &mut rng,
                    Some(log),
                )?;
            }
            None => {
                integrate::step(&mut state, &settings, &config.material, &inflation, &mut rng)?;
            }
        }
        if config.record_every > 0 && (s + 1) % config.record_every == 0 {
            trajectory.record(&state)?;
        }
    }

    output::write_checkpoint(create(&cli.output_dir, "final.ckpt", manifest)?, &state)?;
    output::write_ocean_grid_csv(
        create(&cli.output_dir, "ocean_grid.csv", manifest)?,
        &state.ocean,
        config.grid_resolution,
    )?;
    serde_json::to_writer_pretty(
        create(&cli.output_dir, "modes.json", manifest)?,
        &output::mode_amplitudes(&state.ocean),
    )?;
    println!("simulated {steps} steps to t = {:.0} s", state.time);
    Ok(())
}

fn reduce(cli: &Cli, config: &ScenarioConfig, manifest: &mut Manifest) -> Result<()> {
    let state = config.build_state()?;
    let (reduced, report) =
        superfloe::reduce(&state.field, &config.reduction_config(), &config.material)?;
    output::write_field_json(
        create(&cli.output_dir, "reduced_field.json", manifest)?,
        &reduced,
        0.0,
    )?;
    output::write_field_csv(create(&cli.output_dir, "reduced_field.csv", manifest)?, &reduced)?;
    serde_json::to_writer_pretty(create(&cli.output_dir, "reduction.json", manifest)?, &report)?;
    let table = output::format_reduction_table(&report);
    create(&cli.output_dir, "reduction.txt", manifest)?.write_all(table.as_bytes())?;
    print!("{table}");
    Ok(())
}

/// The three systems compared throughout: full, superfloe-reduced, and bare
/// truncation.
fn reduced_state(config: &ScenarioConfig, full: &SimulationState) -> Result<SimulationState> {
    let (reduced, _) =
        superfloe::reduce(&full.field, &config.reduction_config(), &config.material)?;
    Ok(SimulationState::new(reduced, full.ocean.clone())?)
}

fn bare_state(config: &ScenarioConfig, full: &SimulationState) -> Result<SimulationState> {
    Ok(da::forecast_template(
        full,
        ForecastModel::BareTruncation,
        config.large_count,
        true,
    )?)
}

fn uq_tables(cli: &Cli, config: &ScenarioConfig, manifest: &mut Manifest) -> Result<()> {
    let settings = config.step_settings(cli.oracle);
    let mat = &config.material;
    let none = InflationNoise::disabled();
    let full = config.build_state()?;
    let systems = [
        ("full", full.clone(), label::UQ_BANDS_FULL),
        ("superfloe", reduced_state(config, &full)?, label::UQ_BANDS_SUPER),
        ("bare", bare_state(config, &full)?, label::UQ_BANDS_BARE),
    ];

    // Short-term ensemble momentum bands.
    for (name, state, salt) in &systems {
        let series = uq::ensemble_forecast(
            state,
            &settings,
            mat,
            &none,
            config.ensemble_size,
            config.duration,
            config.record_every,
            seeds::derive(config.seed, *salt),
        )?;
        output::write_momentum_bands_csv(
            create(&cli.output_dir, &format!("bands_{name}.csv"), manifest)?,
            &series,
        )?;
        println!(
            "{name}: final momentum spread {:.3e} kg m/s over {} members",
            series.final_linear_spread(),
            series.members
        );
    }

    // Long single runs: kinematic densities of the large floes plus the
    // small-onto-large contact-force series.
    let steps = (config.duration / config.dt).round() as u64;
    let burn = (steps as f64 * config.burn_in_fraction) as u64;
    for (name, state, salt) in [
        ("full", full.clone(), label::UQ_LONGRUN_FULL),
        ("superfloe", reduced_state(config, &full)?, label::UQ_LONGRUN_SUPER),
    ] {
        let mut state = state;
        let mut rng = seeds::stream(config.seed, salt);
        let mut recorder = uq::LargeFloeForceRecorder::new(config.large_count as u64);
        let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); 6];
        let mut per_floe: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; config.large_count];
        for s in 0..steps {
            let at = state.time;
            integrate::step_observed(&mut state, &settings, mat, &none, &mut rng, Some(&mut recorder))?;
            recorder.commit(at);
            if s < burn {
                continue;
            }
            for (slot, floe) in state
                .field
                .floes
                .iter()
                .filter(|f| f.id < config.large_count as u64)
                .enumerate()
            {
                let mass = floe.mass(mat);
                pooled[0].push(floe.velocity.x);
                pooled[1].push(floe.velocity.y);
                pooled[2].push(floe.angular_velocity);
                pooled[3].push(mass * floe.velocity.x);
                pooled[4].push(mass * floe.velocity.y);
                pooled[5].push(floe.inertia(mat) * floe.angular_velocity);
                per_floe[slot][0].push(mass * floe.velocity.x);
                per_floe[slot][1].push(mass * floe.velocity.y);
            }
        }
        let series = recorder.finish();
        output::write_contact_series_csv(
            create(&cli.output_dir, &format!("contact_series_{name}.csv"), manifest)?,
            &series,
        )?;

        let quantities = ["v1", "v2", "omega", "p1", "p2", "angmom"];
        for (q, samples) in quantities.iter().zip(&pooled) {
            write_pdf(cli, manifest, &format!("pdf_{q}_{name}.csv"), samples, config.bins)?;
        }
        for (slot, series) in per_floe.iter().enumerate() {
            write_pdf(
                cli,
                manifest,
                &format!("pdf_p1_floe{slot}_{name}.csv"),
                &series[0],
                config.bins,
            )?;
            write_pdf(
                cli,
                manifest,
                &format!("pdf_p2_floe{slot}_{name}.csv"),
                &series[1],
                config.bins,
            )?;
        }
        // Torque density for the largest floe, with its normal fit.
        if let Some(track) = series.by_id(0) {
            write_pdf(
                cli,
                manifest,
                &format!("pdf_torque_floe0_{name}.csv"),
                &track.torque,
                config.bins,
            )?;
            println!(
                "{name}: largest-floe torque excess kurtosis {:.2}",
                uq::excess_kurtosis(&track.torque)
            );
        }
    }
    Ok(())
}

fn write_pdf(
    cli: &Cli,
    manifest: &mut Manifest,
    name: &str,
    samples: &[f64],
    bins: usize,
) -> Result<()> {
    if samples.len() < 100 {
        bail!("not enough samples for {name}");
    }
    let table = uq::empirical_pdf(samples, bins)?;
    let (mean, sd) = uq::moment_match(samples);
    let overlay = uq::gaussian_overlay(&table, mean, sd);
    output::write_pdf_csv(create(&cli.output_dir, name, manifest)?, &table, Some(&overlay))?;
    Ok(())
}

/// Runs the superfloe companion model and derives the per-floe noise
/// amplitudes at the observation lag.
fn inflation_coefficients(
    config: &ScenarioConfig,
    oracle: bool,
) -> Result<InflationCoefficients> {
    let settings = config.step_settings(oracle);
    let mat = &config.material;
    let none = InflationNoise::disabled();
    let full = config.build_state()?;
    let mut state = reduced_state(config, &full)?;
    let mut rng = seeds::stream(config.seed, label::INFLATION_RUN);
    for _ in 0..config.inflation_spinup_steps {
        integrate::step(&mut state, &settings, mat, &none, &mut rng)?;
    }
    let series = uq::contact_force_series(
        &mut state,
        &settings,
        mat,
        &none,
        config.large_count as u64,
        config.inflation_steps,
        &mut rng,
    )?;
    Ok(da::compute_inflation(&series, config.obs_interval_steps as usize)?)
}

fn inflate(cli: &Cli, config: &ScenarioConfig, manifest: &mut Manifest) -> Result<()> {
    let coefficients = inflation_coefficients(config, cli.oracle)?;
    serde_json::to_writer_pretty(
        create(&cli.output_dir, "inflation.json", manifest)?,
        &coefficients,
    )?;
    for floe in &coefficients.floes {
        println!(
            "floe {}: sigma_force = ({:.3e}, {:.3e}) N, sigma_torque = {:.3e} N m",
            floe.id, floe.sigma_force.x, floe.sigma_force.y, floe.sigma_torque
        );
    }
    Ok(())
}

fn assimilate(cli: &Cli, config: &ScenarioConfig, manifest: &mut Manifest) -> Result<()> {
    let settings = config.step_settings(cli.oracle);
    let mat = &config.material;
    let none = InflationNoise::disabled();

    // Spin the truth up so the ocean and floe motion are developed before
    // the first observation.
    let mut truth = config.build_state()?;
    let mut rng = seeds::stream(config.seed, label::SPINUP);
    for _ in 0..config.inflation_spinup_steps {
        integrate::step(&mut truth, &settings, mat, &none, &mut rng)?;
    }

    let inflation = match config.forecast {
        ForecastModel::Inflated => Some(inflation_coefficients(config, cli.oracle)?),
        _ => None,
    };
    let scenario = DaScenario {
        truth_initial: truth,
        large_count: config.large_count,
        forecast: config.forecast,
        inflation,
        forecast_gravity: config.forecast_gravity,
        ensemble_size: config.da_ensemble_size,
        cycles: config.da_cycles,
        obs_interval_steps: config.obs_interval_steps,
        sigma_position: config.sigma_position,
        sigma_angle: config.sigma_angle,
        settings,
        material: *mat,
        seed: config.seed,
    };
    let run = da::assimilate(&scenario)?;
    output::write_da_cycles_csv(create(&cli.output_dir, "da_cycles.csv", manifest)?, &run)?;
    serde_json::to_writer_pretty(create(&cli.output_dir, "skill.json", manifest)?, &run.skill)?;
    println!(
        "floe velocities: rmse {:.4e}, pcc {:.3}; ocean modes: rmse {:.4e}, pcc {:.3}",
        run.skill.floe_velocities.rmse,
        run.skill.floe_velocities.pcc,
        run.skill.ocean_modes.rmse,
        run.skill.ocean_modes.pcc
    );
    Ok(())
}

fn score(cli: &Cli, truth: &Path, estimate: &Path, manifest: &mut Manifest) -> Result<()> {
    let (truth_header, truth_cols) = read_csv_columns(truth)?;
    let (est_header, est_cols) = read_csv_columns(estimate)?;
    if truth_header != est_header {
        bail!(
            "column headers differ between {truth:?} and {estimate:?}: {truth_header:?} vs {est_header:?}"
        );
    }
    // The first column is the index (time, cycle); every other column is a
    // scored series.
    let mut scores = serde_json::Map::new();
    for (i, name) in truth_header.iter().enumerate().skip(1) {
        let rmse = da::rmse(&truth_cols[i], &est_cols[i])?;
        let pcc = match da::pcc(&truth_cols[i], &est_cols[i]) {
            Ok(p) => serde_json::json!(p),
            Err(floe_sim::Error::ZeroVariance(_)) => serde_json::Value::Null,
            Err(e) => return Err(e.into()),
        };
        scores.insert(
            name.clone(),
            serde_json::json!({ "rmse": rmse, "pcc": pcc }),
        );
    }
    let body = serde_json::Value::Object(scores);
    serde_json::to_writer_pretty(create(&cli.output_dir, "score.json", manifest)?, &body)?;
    println!("{body}");
    Ok(())
}

fn read_csv_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .context("empty csv")?
        .split(',')
        .map(str::trim)
        .map(String::from)
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (number, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            bail!("line {} of {path:?} has {} cells, expected {}", number + 2, cells.len(), header.len());
        }
        for (column, cell) in columns.iter_mut().zip(cells) {
            column.push(
                cell.trim()
                    .parse::<f64>()
                    .with_context(|| format!("line {} of {path:?}", number + 2))?,
            );
        }
    }
    Ok((header, columns))
}

fn bench(cli: &Cli, config: &ScenarioConfig, steps: u64, manifest: &mut Manifest) -> Result<()> {
    let settings = config.step_settings(cli.oracle);
    let mat = &config.material;
    let none = InflationNoise::disabled();
    let full = config.build_state()?;
    let reduced = reduced_state(config, &full)?;

    let time_system = |initial: &SimulationState, salt: u64| -> Result<f64> {
        let mut state = initial.clone();
        let mut rng = seeds::stream(config.seed, salt);
        let start = Instant::now();
        for _ in 0..steps {
            integrate::step(&mut state, &settings, mat, &none, &mut rng)?;
        }
        Ok(start.elapsed().as_secs_f64())
    };
    let full_seconds = time_system(&full, label::BENCH_FULL)?;
    let reduced_seconds = time_system(&reduced, label::BENCH_REDUCED)?;
    let ratio = reduced_seconds / full_seconds;

    let body = serde_json::json!({
        "steps": steps,
        "full_floes": full.field.len(),
        "reduced_floes": reduced.field.len(),
        "full_seconds": full_seconds,
        "reduced_seconds": reduced_seconds,
        "ratio": ratio,
    });
    serde_json::to_writer_pretty(create(&cli.output_dir, "bench.json", manifest)?, &body)?;
    println!(
        "full ({} floes): {full_seconds:.2} s; reduced ({} floes): {reduced_seconds:.2} s; ratio {ratio:.3}",
        full.field.len(),
        reduced.field.len()
    );
    Ok(())
}
