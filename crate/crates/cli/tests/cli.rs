use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_porous-renewal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> String {
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in:\n{text}"))
        .to_string()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("pr-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn estimate_one_sided_refuses_upper_bound() {
    let o = run(&["estimate", "--beta", "1", "--mu", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let rho: f64 = value(&s, "rho_hat").parse().unwrap();
    // (1-s)(1+eta)/(1+eta+s) with s = sqrt(2/3)
    let sv = (2.0f64 / 3.0).sqrt();
    assert!((rho - (1.0 - sv) * 2.0 / (2.0 + sv)).abs() < 1e-11);
    assert!(value(&s, "rho_upper").starts_with("refused"));
    assert!(value(&s, "rho_upper").contains("mu > 2*beta"));
    assert_eq!(value(&s, "eta"), "1");
}

#[test]
fn estimate_two_sided_and_lossless() {
    let s = stdout(&run(&["estimate", "--mu", "1", "--h", "2", "--theta-deg", "0"]));
    assert_eq!(value(&s, "rho"), "0.5");
    let s = stdout(&run(&["estimate", "--beta", "0", "--mu", "1"]));
    assert_eq!(value(&s, "rho_hat"), "1");
}

#[test]
fn conflicting_or_bad_flags_are_usage_errors() {
    for args in [
        &["estimate", "--beta", "1", "--mu", "1", "--h", "2"][..],
        &["estimate", "--beta", "1"],
        &["estimate", "--beta", "1", "--mu", "1", "--theta-deg", "90"],
        &["no-such-command"],
        &["estimate", "--mu", "oops"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn negative_parameters_are_rejected() {
    let o = run(&["estimate", "--beta", "-1", "--mu", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta"));
}

#[test]
fn two_sided_sweep_matches_closed_form() {
    let s = stdout(&run(&["sweep", "--var", "hmu", "--from", "0.5", "--to", "10", "--step", "0.5"]));
    let mut lines = s.lines();
    assert_eq!(
        lines.next().unwrap(),
        "case,eta,beta,mu,theta_deg,h,rho_hat,rho_upper,rho_mc,rho_mc_stderr,n_rays,seed"
    );
    let mut seen = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 12);
        let h: f64 = f[5].parse().unwrap();
        let rho: f64 = f[6].parse().unwrap();
        assert!((rho - h / (h + 2.0)).abs() < 1e-11, "{l}");
        assert!(f[7].is_empty() && f[8].is_empty() && f[11].is_empty());
        if [0.5, 1.0, 2.0, 5.0, 10.0].contains(&h) {
            seen += 1;
        }
    }
    assert_eq!(seen, 5);
}

#[test]
fn sweep_is_deterministic_across_workers() {
    let base = ["sweep", "--var", "eta", "--from", "0.05", "--to", "1", "--step", "0.19", "--mc", "--n", "4000", "--seed", "77"];
    let a = run(&[&base[..], &["--workers", "1"]].concat());
    let b = run(&[&base[..], &["--workers", "3"]].concat());
    let c = run(&[&base[..], &["--workers", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let s = stdout(&a);
    let rows: Vec<&str> = s.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for (k, r) in rows.iter().enumerate() {
        assert!(r.ends_with(&format!(",4000,{}", 77 + k)), "{r}");
    }
    // rho_upper empty once eta >= 0.5
    let eta_ge_half = rows.iter().filter(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap() >= 0.5);
    assert!(eta_ge_half.clone().count() > 0);
    for r in eta_ge_half {
        assert!(r.split(',').nth(7).unwrap().is_empty(), "{r}");
    }
    assert!(String::from_utf8_lossy(&a.stderr).contains("max |rho_mc - rho_hat|"));
}

#[test]
fn sweep_values_round_trip_through_estimate() {
    let s = stdout(&run(&["sweep", "--var", "eta", "--from", "0.1", "--to", "0.9", "--step", "0.2", "--mu", "2", "--theta-deg", "0"]));
    for row in s.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        let e = stdout(&run(&["estimate", "--beta", f[2], "--mu", f[3], "--theta-deg", f[4]]));
        assert_eq!(value(&e, "rho_hat"), f[6], "{row}");
        if !f[7].is_empty() {
            assert_eq!(value(&e, "rho_upper"), f[7], "{row}");
        }
    }
}

#[test]
fn config_file_composes_with_flags() {
    let d = scratch("cfg");
    let p = d.join("run.conf");
    std::fs::write(&p, "# medium\nbeta = 1\nmu = 4   # fast steps\n").unwrap();
    let cfg = p.to_str().unwrap();
    let s = stdout(&run(&["estimate", "--config", cfg]));
    assert_eq!(value(&s, "eta"), "0.25");
    let s = stdout(&run(&["estimate", "--config", cfg, "--mu", "1"]));
    assert_eq!(value(&s, "eta"), "1");

    std::fs::write(&p, "beta = 1\n\nmu = fast\n").unwrap();
    let o = run(&["estimate", "--config", cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    std::fs::write(&p, "beta = 1\nmue = 2\n").unwrap();
    let o = run(&["estimate", "--config", cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn unwritable_output_fails() {
    let o = run(&["sweep", "--var", "hmu", "--from", "1", "--to", "2", "--step", "1", "--out", "/nonexistent-dir/x.csv"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn simulate_without_seed_prints_one() {
    let o = run(&["simulate-1d", "--beta", "1", "--mu", "1", "--n", "100"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed = "));
}

#[test]
fn simulate_2d_writes_samples_flux_and_bed() {
    let d = scratch("sim2d");
    let p = d.join("paths.txt");
    let o = run(&["simulate-2d", "--n", "300", "--seed", "4", "--bed-width", "60", "--out", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let paths = std::fs::read_to_string(&p).unwrap();
    assert!(paths.lines().count() > 10);
    let flux = std::fs::read_to_string(d.join("paths.txt.flux.csv")).unwrap();
    assert!(flux.starts_with("depth_lo,depth_hi,up,down,net"));
    assert!(d.join("paths.txt.bed.txt").exists());

    // the samples feed straight into fit
    let f = run(&["fit", "--input", p.to_str().unwrap(), "--beta", "1"]);
    assert_eq!(f.status.code(), Some(0));
    let s = stdout(&f);
    let mle: f64 = value(&s, "mu_mle").parse().unwrap();
    assert!(mle > 0.0);
    value(&s, "rho_hat_ls");

    // replaying the saved bed reproduces the run
    let again = run(&["simulate-2d", "--n", "300", "--seed", "4", "--bed-file", d.join("paths.txt.bed.txt").to_str().unwrap()]);
    assert_eq!(value(&stdout(&o), "rho"), value(&stdout(&again), "rho"));
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn empty_bed_pipeline_flags_non_scattering() {
    let o = run(&["pipeline-2d", "--bed-vf", "0", "--n", "500", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(value(&s, "rho_mcrt"), "0");
    assert_eq!(value(&s, "non_scattering"), "true");
    assert!(s.contains("error[fit]"));
}

#[test]
fn validate_passes_and_mutation_is_caught() {
    let d = scratch("val");
    let prefix = d.join("report");
    let o = run(&["validate", "--only", "1,9", "--scale", "0.05", "--out", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(d.join("report.csv")).unwrap();
    assert!(csv.starts_with("criterion,label,value,reference,error,tolerance,passed"));
    assert!(std::fs::read_to_string(d.join("report.txt")).unwrap().contains("censored"));

    let o = run(&["validate", "--only", "1", "--scale", "0.05", "--mutate", "flip-two-sided-sign"]);
    assert_eq!(o.status.code(), Some(3));
    let s = stdout(&o);
    assert!(s.contains("FAIL criterion 1"));
    assert!(s.contains("hmu="), "{s}");
    std::fs::remove_dir_all(d).unwrap();
}
