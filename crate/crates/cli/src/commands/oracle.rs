//! The `oracle` verb: exact maximal-clique enumeration of the binarized
//! consistency graph, written as a JSON clique list for fixtures.

use crate::args::OracleArgs;
use crate::error::{CliError, CliResult};
use crate::output::write_json;
use crate::pipeline::{build_problem, run_oracle};

pub fn cmd_oracle(args: &OracleArgs) -> CliResult<()> {
    let mut config = crate::args::resolve_config(&args.common, &args.scene, &args.solver)?;
    config.solver = crate::config::SolverKind::OracleBk;
    let problem = build_problem(&config)?;
    let cliques = run_oracle(&config, &problem)?;

    std::fs::create_dir_all(&args.common.out_dir).map_err(|e| CliError::io("create out dir", e))?;
    let path = args.common.out_dir.join("cliques.json");
    write_json(&path, &cliques)?;

    let sizes: Vec<usize> = cliques.iter().map(|c| c.len()).collect();
    let max_size = sizes.iter().max().copied().unwrap_or(0);
    println!(
        "{} candidates, {} maximal cliques (largest {max_size}), wrote {}",
        problem.affinity.n(),
        cliques.len(),
        path.display()
    );
    Ok(())
}
