use std::fs::File;
use std::io;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Subcommand;
use dsf_core::confidentiality::{
    discernibility_metric, equivalence_classes, generalize, k_anonymity_check, l_diversity_check,
    minimal_generalization, AnonError, GeneralizationHierarchy, GeneralizationVector, KAnonymity, LDiversity,
};
use dsf_core::model::Table;
use dsf_core::storage::write_table_csv;

use crate::context::{comma_list, parse_numbers, read_table, usage, Ctx, Outcome};
use crate::output::Report;

#[derive(Debug, Subcommand)]
pub enum AnonCmd {
    /// Replaces quasi-identifiers by their ancestors at the given levels.
    Generalize {
        #[arg(long)]
        input: PathBuf,
        /// One per quasi-identifier, in vector order.
        #[arg(long = "hierarchy", value_name = "ATTRIBUTE=CSV", required = true)]
        hierarchies: Vec<String>,
        /// Levels such as `1,0`.
        #[arg(long)]
        vector: String,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks k-anonymity over the named columns.
    Check {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        qi: String,
        #[arg(long)]
        k: usize,
    },
    /// Finds a minimal k-anonymous generalization, suppressing at most
    /// `max-suppress` records.
    Minimize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "hierarchy", value_name = "ATTRIBUTE=CSV", required = true)]
        hierarchies: Vec<String>,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        max_suppress: usize,
        /// Writes the generalized table without the suppressed records.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discernibility metric from class sizes or from a table.
    Dm {
        /// Class sizes such as `3,2,1`.
        #[arg(long, conflicts_with_all = ["input", "qi"])]
        classes: Option<String>,
        #[arg(long, requires = "qi")]
        input: Option<PathBuf>,
        #[arg(long, requires = "input")]
        qi: Option<String>,
        #[arg(long)]
        k: usize,
        /// Table size; defaults to the sum of the classes.
        #[arg(long)]
        total: Option<usize>,
    },
    /// Checks distinct l-diversity of a sensitive column.
    Ldiv {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        qi: String,
        #[arg(long)]
        sensitive: String,
        #[arg(long)]
        l: usize,
    },
}

fn load_hierarchies(specs: &[String]) -> Result<Vec<GeneralizationHierarchy>> {
    specs
        .iter()
        .map(|s| {
            let (attr, path) = s
                .split_once('=')
                .ok_or_else(|| usage(format!("--hierarchy `{s}` is not ATTRIBUTE=CSV")))?;
            let file = File::open(path).with_context(|| format!("reading {path}"))?;
            Ok(GeneralizationHierarchy::from_csv(attr, file)?)
        })
        .collect()
}

fn write_table(t: &Table, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => write_table_csv(t, File::create(p).with_context(|| format!("writing {}", p.display()))?)?,
        None => write_table_csv(t, io::stdout().lock())?,
    }
    Ok(())
}

fn class_report(r: &mut Report, failing: usize, total: usize) {
    r.field("classes", total).field("failing_classes", failing);
}

pub fn run(ctx: &Ctx, cmd: AnonCmd) -> Result<Outcome> {
    match cmd {
        AnonCmd::Generalize { input, hierarchies, vector, out } => {
            let t = read_table(&input)?;
            let hs = load_hierarchies(&hierarchies)?;
            let v = GeneralizationVector(parse_numbers(&vector, "--vector")?);
            write_table(&generalize(&t, &hs, &v)?, out.as_ref())?;
            Ok(Outcome::Ok)
        }
        AnonCmd::Check { input, qi, k } => {
            let t = read_table(&input)?;
            let qi = comma_list(&qi);
            let result = k_anonymity_check(&t, &qi, k)?;
            let total = equivalence_classes(&t, &qi)?.len();
            let mut r = Report::new();
            r.field("k", k).field("k_anonymous", result.passed());
            let failing = match &result {
                KAnonymity::Pass => 0,
                KAnonymity::Fail(c) => c.len(),
            };
            class_report(&mut r, failing, total);
            ctx.emit(&r);
            Ok(Outcome::from_ok(result.passed()))
        }
        AnonCmd::Minimize { input, hierarchies, k, max_suppress, out } => {
            let t = read_table(&input)?;
            let hs = load_hierarchies(&hierarchies)?;
            let m = match minimal_generalization(&t, &hs, k, max_suppress) {
                Ok(m) => m,
                Err(AnonError::NoSolution) => {
                    ctx.emit(Report::new().field("k", k).field("solution", "none"));
                    return Ok(Outcome::Negative);
                }
                Err(e) => return Err(e.into()),
            };
            let levels: Vec<String> = m.vector.levels().iter().map(usize::to_string).collect();
            ctx.emit(
                Report::new()
                    .field("k", k)
                    .field("vector", levels.join(","))
                    .field("height", m.vector.total_height())
                    .field("suppressed", m.suppressed_ids.len())
                    .field("dm", m.dm_cost),
            );
            if let Some(path) = out {
                let mut g = generalize(&t, &hs, &m.vector)?;
                g.records.retain(|r| !m.suppressed_ids.contains(&r.id));
                write_table(&g, Some(&path))?;
            }
            Ok(Outcome::Ok)
        }
        AnonCmd::Dm { classes, input, qi, k, total } => {
            let sizes: Vec<usize> = match (classes, input, qi) {
                (Some(c), _, _) => parse_numbers(&c, "--classes")?,
                (None, Some(input), Some(qi)) => {
                    let t = read_table(&input)?;
                    equivalence_classes(&t, &comma_list(&qi))?.iter().map(|c| c.size()).collect()
                }
                _ => return Err(usage("pass --classes, or --input with --qi")),
            };
            let total = total.unwrap_or_else(|| sizes.iter().sum());
            ctx.emit(Report::new().field("dm", discernibility_metric(&sizes, k, total)));
            Ok(Outcome::Ok)
        }
        AnonCmd::Ldiv { input, qi, sensitive, l } => {
            let t = read_table(&input)?;
            let qi = comma_list(&qi);
            let result = l_diversity_check(&t, &qi, &sensitive, l)?;
            let total = equivalence_classes(&t, &qi)?.len();
            let mut r = Report::new();
            r.field("l", l).field("l_diverse", result.passed());
            let failing = match &result {
                LDiversity::Pass => 0,
                LDiversity::Fail(c) => c.len(),
            };
            class_report(&mut r, failing, total);
            ctx.emit(&r);
            Ok(Outcome::from_ok(result.passed()))
        }
    }
}
