mod ablate;
mod compare;
mod gen_scene;
mod oracle;
mod run;

pub use ablate::cmd_ablate;
pub use compare::cmd_compare;
pub use gen_scene::cmd_gen_scene;
pub use oracle::cmd_oracle;
pub use run::cmd_run;
