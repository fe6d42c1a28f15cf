#![allow(dead_code)]

use geobim_core::pipeline::{load_model, Config};
use geobim_core::storey::FederatedModel;
use geobim_core::ExecMode;

pub fn load(name: &str, src: String) -> FederatedModel {
    load_with(name, src, &Config::default())
}

pub fn load_with(name: &str, src: String, cfg: &Config) -> FederatedModel {
    load_model(&[(name.to_string(), src.into_bytes())], cfg, ExecMode::default()).unwrap()
}

pub fn storey(model: &FederatedModel, name: &str) -> usize {
    model.storey_index(name).unwrap_or_else(|| panic!("no storey {name}"))
}
