//! `rank`: re-rank externally supplied or previously computed subset scores
//! with the configured weights. Reads any CSV with `config,dr,sq,ap,sd`
//! columns (rows with an empty score are skipped) and writes `ranking.csv`
//! and `report.txt`.

use std::path::Path;

use anyhow::{bail, Context as _};
use curate_core::scoring::{self, Ranked};

use super::{runtime, Context};
use crate::error::CliResult;
use crate::report;

pub fn read_scores(path: &Path, weights: scoring::ScoreWeights) -> anyhow::Result<Vec<Ranked>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: no `{name}` column", path.display()))
    };
    let (c, dr, sq, ap, sd) = (
        col("config")?,
        col("dr")?,
        col("sq")?,
        col("ap")?,
        col("sd")?,
    );
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| rec.get(j).unwrap_or("").trim();
        if [dr, sq, ap, sd].iter().any(|&j| field(j).is_empty()) {
            log::warn!(
                "{} line {}: `{}` has no scores, skipped",
                path.display(),
                i + 2,
                field(c)
            );
            continue;
        }
        let num = |j: usize| -> anyhow::Result<f64> {
            field(j).parse().with_context(|| {
                format!(
                    "{} line {}: `{}` is not a number",
                    path.display(),
                    i + 2,
                    field(j)
                )
            })
        };
        let v = [num(dr)?, num(sq)?, num(ap)?, num(sd)?];
        if v.iter().any(|x| !x.is_finite()) {
            bail!("{} line {}: non-finite score", path.display(), i + 2);
        }
        out.push(Ranked {
            config: field(c).to_string(),
            scores: scoring::composite(v[0], v[1], v[2], v[3], weights),
        });
    }
    Ok(out)
}

pub fn run(ctx: &Context, scores: Option<&Path>) -> CliResult<()> {
    let path = scores
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.out.join("sweep.csv"));
    ctx.require(&path, "score table")?;
    let ranked = scoring::rank(read_scores(&path, ctx.config.weights)?);
    let out = ctx.out_dir("")?;
    report::write_ranking(&out.join("ranking.csv"), &ranked, &[])?;
    std::fs::write(out.join("report.txt"), report::render_ranking(&ranked, &[]))
        .map_err(runtime)?;
    Ok(())
}
