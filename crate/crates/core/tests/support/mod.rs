pub mod katz_oracle;
pub mod feature_oracle;
pub mod fusion_synth;
