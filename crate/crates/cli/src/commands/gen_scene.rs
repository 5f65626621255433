//! The `gen-scene` verb: write the two point sets and a metadata sidecar
//! (true pose plus symmetry group) for a synthetic scene.

use assoc_core::{generate, SceneSidecar, SceneSpec};

use crate::args::GenSceneArgs;
use crate::config::SceneSource;
use crate::error::{CliError, CliResult};
use crate::output::write_json;

pub fn cmd_gen_scene(args: &GenSceneArgs) -> CliResult<()> {
    let spec: SceneSpec = match args.scene.to_source()? {
        Some(SceneSource::Generated(spec)) => spec,
        Some(SceneSource::FromFile { .. }) => {
            return Err(CliError::Config(
                "gen-scene needs a generated scene kind, not from-file".into(),
            ))
        }
        None => match &args.common.config {
            Some(path) => match crate::config::ExperimentConfig::from_file(path)?.scene {
                SceneSource::Generated(spec) => spec,
                SceneSource::FromFile { .. } => {
                    return Err(CliError::Config(
                        "gen-scene needs a generated scene kind, not from-file".into(),
                    ))
                }
            },
            None => SceneSpec::circle(8, 4.0),
        },
    };

    let scene = generate(&spec).map_err(|e| CliError::Config(format!("scene generation: {e}")))?;
    let dir = &args.common.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io("create out dir", e))?;

    let s_path = dir.join(format!("{}_s.json", args.name));
    let t_path = dir.join(format!("{}_t.json", args.name));
    let meta_path = dir.join(format!("{}_meta.json", args.name));
    write_json(&s_path, &scene.s)?;
    write_json(&t_path, &scene.t)?;
    write_json(
        &meta_path,
        &SceneSidecar {
            true_pose: scene.true_pose,
            symmetry_group: scene.symmetry_group,
        },
    )?;
    println!(
        "wrote {} ({} points), {} ({} points), {}",
        s_path.display(),
        scene.s.len(),
        t_path.display(),
        scene.t.len(),
        meta_path.display()
    );
    Ok(())
}
