use serde::Deserialize;

#[derive(Deserialize)]
pub struct Golden {
    pub attributes: Vec<(String, String, String)>,
    pub params: Vec<(String, String, String)>,
}

pub fn golden(name: &str) -> Golden {
    let p = super::corpus_dir().join("golden").join(format!("{name}.golden.json"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

