//! Regenerates everything under `fixtures/` from fixed seeds.
//!
//! The committed fixture files are outputs of this program, not hand-edited
//! data: rerunning it must reproduce them byte for byte. Run from anywhere:
//!
//! ```text
//! cargo run -p plutus-cli --example gen_fixtures
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use plutus_core::compliance::{default_ruleset, ruleset_to_csv};
use plutus_core::market_data::{write_benchmark_csv, write_fundamentals_csv, write_tick_csv};
use plutus_core::metrics::NavSeries;
use plutus_core::report::emit_nav_csv;
use plutus_core::synth::{benchmark_fixture, fundamentals_fixture, random_walk_ticks};

fn d(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap_or_else(|e| panic!("writing {}: {e}", path.display()));
    println!("wrote {}", path.display());
}

fn readme_with(sections: &[&str]) -> String {
    let mut s = String::from("# Demo Momentum Screen\n\n");
    for sec in sections {
        s.push_str(&format!(
            "## {sec}\n\nPlaceholder body for the {sec} section of this fixture repository.\n\n"
        ));
    }
    s
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let fixtures = root.join("fixtures");
    fs::create_dir_all(fixtures.join("rulesets")).unwrap();
    fs::create_dir_all(fixtures.join("readmes/full")).unwrap();
    fs::create_dir_all(fixtures.join("readmes/partial")).unwrap();
    fs::create_dir_all(fixtures.join("readmes/none")).unwrap();

    // Market data. Seeds are arbitrary but frozen; the series are sized so
    // every CLI fixture run completes in well under a second.
    let ticks = random_walk_ticks(7, d("2022-01-03"), 5, 400, 30, 1000.0, 1.2, 0.0, "VN30F1M");
    write_tick_csv(&fixtures.join("ticks.csv"), &ticks).unwrap();
    println!("wrote {} ({} ticks)", fixtures.join("ticks.csv").display(), ticks.ticks.len());

    let table = fundamentals_fixture(11, d("2021-01-15"), 24, 10, &[], &[]);
    write_fundamentals_csv(&fixtures.join("fundamentals.csv"), &table).unwrap();
    println!(
        "wrote {} ({} rows)",
        fixtures.join("fundamentals.csv").display(),
        table.rows.len()
    );

    let bench = benchmark_fixture(2, d("2021-01-01"), 760, 1000.0, 0.0003, 0.008);
    write_benchmark_csv(&fixtures.join("benchmark.csv"), &bench).unwrap();
    println!("wrote {}", fixtures.join("benchmark.csv").display());

    let nav_walk = benchmark_fixture(3, d("2021-01-01"), 300, 1_000_000_000.0, 0.0004, 0.01);
    let nav = NavSeries { dates: nav_walk.dates, values: nav_walk.levels };
    emit_nav_csv(&fixtures.join("nav.csv"), &nav).unwrap();
    println!("wrote {}", fixtures.join("nav.csv").display());

    // Run configs. Data paths are relative to the config file's directory.
    write(
        &fixtures.join("smart_beta.conf"),
        "# monthly value screen over the synthetic fundamentals\n\
         data.fundamentals = fundamentals.csv\n\
         data.benchmark = benchmark.csv\n",
    );
    write(
        &fixtures.join("market_maker.conf"),
        "# quoting replay over the synthetic tick walk\n\
         data.ticks = ticks.csv\n",
    );
    write(
        &fixtures.join("optimize_smart_beta.conf"),
        "data.fundamentals = fundamentals.csv\n\
         data.benchmark = benchmark.csv\n\
         optimizer.n_trials = 50\n",
    );
    write(
        &fixtures.join("optimize_market_maker.conf"),
        "data.ticks = ticks.csv\n\
         optimizer.n_trials = 50\n",
    );
    write(
        &fixtures.join("metrics.conf"),
        "data.nav = nav.csv\n\
         data.benchmark = benchmark.csv\n",
    );

    // The standard ruleset as a data file, for `check --rules`.
    write(&fixtures.join("rulesets/plutus.csv"), &ruleset_to_csv(&default_ruleset()));

    // README fixtures: fully compliant, one required section short, and a
    // repository with no README at all.
    write(
        &fixtures.join("readmes/full/README.md"),
        &readme_with(&[
            "Abstract",
            "Introduction",
            "Related Work",
            "Trading Hypotheses",
            "Data",
            "Implementation",
            "Backtesting & Optimization",
            "Paper Trading",
            "Conclusion",
            "References",
            "Final Report or Paper",
        ]),
    );
    write(
        &fixtures.join("readmes/partial/README.md"),
        &readme_with(&[
            "Abstract",
            "Introduction",
            "Data",
            "Implementation",
            "Backtesting & Optimization",
            "References",
        ]),
    );
    write(
        &fixtures.join("readmes/none/placeholder.txt"),
        "This fixture repository deliberately has no README.\n",
    );
}
