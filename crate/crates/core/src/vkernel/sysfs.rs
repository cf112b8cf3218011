//! In-memory /sys and /dev namespaces.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeKind {
    Dir,
    /// Device attribute file; `attr` indexes the driver's flattened attribute list.
    AttrFile { device: usize, attr: usize, writable: bool },
    ParamFile { param: usize },
    /// Read-only file with fixed content (`uevent`, module driver links).
    Info { content: String },
    DevNode { device: usize },
}

#[derive(Clone, Debug)]
pub struct VNode {
    pub name: String,
    pub kind: NodeKind,
    pub parent: Option<usize>,
    pub children: BTreeMap<String, usize>,
}

/// A tiny hierarchical namespace. Node 0 is `/`.
#[derive(Clone, Debug)]
pub struct Vfs {
    nodes: Vec<VNode>,
}

impl Default for Vfs {
    fn default() -> Self {
        Self::new()
    }
}

impl Vfs {
    pub fn new() -> Self {
        Self {
            nodes: vec![VNode {
                name: String::new(),
                kind: NodeKind::Dir,
                parent: None,
                children: BTreeMap::new(),
            }],
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &VNode {
        &self.nodes[id]
    }

    /// Create `name` under `parent`; fails if the name is taken.
    pub fn create(&mut self, parent: usize, name: &str, kind: NodeKind) -> Result<usize, String> {
        if self.nodes[parent].children.contains_key(name) {
            return Err(format!("{}/{name} already exists", self.path_of(parent)));
        }
        let id = self.nodes.len();
        self.nodes.push(VNode {
            name: name.to_string(),
            kind,
            parent: Some(parent),
            children: BTreeMap::new(),
        });
        self.nodes[parent].children.insert(name.to_string(), id);
        Ok(id)
    }

    /// Create a directory, or return the existing one.
    pub fn mkdir(&mut self, parent: usize, name: &str) -> Result<usize, String> {
        match self.nodes[parent].children.get(name) {
            Some(&id) if self.nodes[id].kind == NodeKind::Dir => Ok(id),
            Some(_) => Err(format!("{}/{name} exists and is not a directory", self.path_of(parent))),
            None => self.create(parent, name, NodeKind::Dir),
        }
    }

    pub fn mkdir_p(&mut self, path: &str) -> Result<usize, String> {
        let mut cur = self.root();
        for comp in path.split('/').filter(|c| !c.is_empty()) {
            cur = self.mkdir(cur, comp)?;
        }
        Ok(cur)
    }

    pub fn lookup(&self, path: &str) -> Option<usize> {
        let mut cur = self.root();
        for comp in path.split('/').filter(|c| !c.is_empty()) {
            cur = *self.nodes[cur].children.get(comp)?;
        }
        Some(cur)
    }

    pub fn path_of(&self, mut id: usize) -> String {
        let mut comps = Vec::new();
        while let Some(p) = self.nodes[id].parent {
            comps.push(self.nodes[id].name.as_str());
            id = p;
        }
        comps.reverse();
        format!("/{}", comps.join("/"))
    }

    /// Child names of a directory, sorted.
    pub fn list(&self, path: &str) -> Option<Vec<&str>> {
        let id = self.lookup(path)?;
        Some(self.nodes[id].children.keys().map(String::as_str).collect())
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = (&str, usize)> {
        self.nodes[id].children.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_dir(&self, id: usize) -> bool {
        self.nodes[id].kind == NodeKind::Dir
    }

    /// Content of an info file.
    pub fn read_info(&self, path: &str) -> Option<&str> {
        match &self.nodes[self.lookup(path)?].kind {
            NodeKind::Info { content } => Some(content),
            _ => None,
        }
    }

    /// Paths of every non-directory node below `path`, sorted.
    pub fn files_under(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(id) = self.lookup(path) {
            self.collect_files(id, &mut out);
        }
        out
    }

    fn collect_files(&self, id: usize, out: &mut Vec<String>) {
        for (_, c) in self.children(id) {
            if self.is_dir(c) {
                self.collect_files(c, out);
            } else {
                out.push(self.path_of(c));
            }
        }
    }
}

/// Match `path` against a pattern where each `#` stands for a run of one or more digits.
pub fn wildcard_match(pattern: &str, path: &str) -> bool {
    let (p, s) = (pattern.as_bytes(), path.as_bytes());
    fn go(p: &[u8], s: &[u8]) -> bool {
        match p.first() {
            None => s.is_empty(),
            Some(b'#') => {
                let digits = s.iter().take_while(|c| c.is_ascii_digit()).count();
                (1..=digits).any(|n| go(&p[1..], &s[n..]))
            }
            Some(&c) => s.first() == Some(&c) && go(&p[1..], &s[1..]),
        }
    }
    go(p, s)
}
