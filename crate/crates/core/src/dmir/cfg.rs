use serde::Serialize;

use super::ast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Entry,
    IfTrue,
    IfFalse,
    Case,
    Default,
    LoopEnter,
    LoopExit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CfgEdge {
    pub id: EdgeId,
    pub kind: EdgeKind,
    /// Block holding the branching statement.
    pub from: BlockId,
    /// Target block; `None` when the edge falls through (missing else/default, loop exit).
    pub to: Option<BlockId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Cfg {
    pub blocks: Vec<BlockId>,
    pub edges: Vec<CfgEdge>,
}

impl Cfg {
    pub fn conditional_edges(&self) -> impl Iterator<Item = &CfgEdge> {
        self.edges.iter().filter(|e| {
            matches!(
                e.kind,
                EdgeKind::IfTrue | EdgeKind::IfFalse | EdgeKind::Case | EdgeKind::Default
            )
        })
    }
}

/// Structural control-flow graph of a block: one node per (nested) block,
/// two edges per `if`, one per `case` plus one default edge per `switch`,
/// and enter/exit edges per loop.
pub fn control_flow_graph(block: &Block) -> Cfg {
    let mut cfg = Cfg::default();
    walk(block, &mut cfg);
    cfg
}

fn walk(block: &Block, cfg: &mut Cfg) {
    cfg.blocks.push(block.id);
    for s in &block.stmts {
        match &s.kind {
            StmtKind::If {
                then_edge,
                then_block,
                else_edge,
                else_block,
                ..
            } => {
                cfg.edges.push(CfgEdge {
                    id: *then_edge,
                    kind: EdgeKind::IfTrue,
                    from: block.id,
                    to: Some(then_block.id),
                });
                walk(then_block, cfg);
                cfg.edges.push(CfgEdge {
                    id: *else_edge,
                    kind: EdgeKind::IfFalse,
                    from: block.id,
                    to: else_block.as_ref().map(|b| b.id),
                });
                if let Some(b) = else_block {
                    walk(b, cfg);
                }
            }
            StmtKind::Switch {
                cases,
                default_edge,
                default,
                ..
            } => {
                for c in cases {
                    cfg.edges.push(CfgEdge {
                        id: c.edge,
                        kind: EdgeKind::Case,
                        from: block.id,
                        to: Some(c.block.id),
                    });
                    walk(&c.block, cfg);
                }
                cfg.edges.push(CfgEdge {
                    id: *default_edge,
                    kind: EdgeKind::Default,
                    from: block.id,
                    to: default.as_ref().map(|b| b.id),
                });
                if let Some(b) = default {
                    walk(b, cfg);
                }
            }
            StmtKind::ListIter {
                enter_edge,
                exit_edge,
                body,
                ..
            }
            | StmtKind::EachByte {
                enter_edge,
                exit_edge,
                body,
                ..
            } => {
                cfg.edges.push(CfgEdge {
                    id: *enter_edge,
                    kind: EdgeKind::LoopEnter,
                    from: block.id,
                    to: Some(body.id),
                });
                walk(body, cfg);
                cfg.edges.push(CfgEdge {
                    id: *exit_edge,
                    kind: EdgeKind::LoopExit,
                    from: block.id,
                    to: None,
                });
            }
            _ => {}
        }
    }
}

/// CFG of a whole body, including its entry edge.
pub fn body_cfg(body: &Body) -> Cfg {
    let mut cfg = Cfg::default();
    cfg.edges.push(CfgEdge {
        id: body.entry_edge,
        kind: EdgeKind::Entry,
        from: body.block.id,
        to: Some(body.block.id),
    });
    walk(&body.block, &mut cfg);
    cfg
}

impl DmirProgram {
    /// Every edge id the program defines, sorted.
    pub fn all_edges(&self) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = self
            .bodies()
            .iter()
            .flat_map(|b| body_cfg(b.body).edges.into_iter().map(|e| e.id))
            .collect();
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmir::parse;

    fn op_block(body: &str) -> Block {
        let src = format!("module m {{ driver d {{ field x: int = 0; op f(a: int) {body} }} }}");
        let p = parse(&src).unwrap();
        p.driver("d").unwrap().ops[0].body.block.clone()
    }

    #[test]
    fn straight_line() {
        let cfg = control_flow_graph(&op_block("{ self.x = 1; self.x = 2; self.x = 3; }"));
        assert_eq!(cfg.blocks.len(), 1);
        assert_eq!(cfg.conditional_edges().count(), 0);
    }

    #[test]
    fn diamond() {
        let cfg = control_flow_graph(&op_block("{ if (a > 0) { self.x = 1; } else { self.x = 2; } }"));
        assert_eq!(cfg.blocks.len(), 3);
        assert_eq!(cfg.conditional_edges().count(), 2);
    }

    #[test]
    fn switch_three_cases_and_default() {
        let cfg = control_flow_graph(&op_block(
            "{ switch (a) { case 0: { self.x = 0; } case 1: { self.x = 1; } case 2: { self.x = 2; } default: { self.x = 3; } } }",
        ));
        assert_eq!(cfg.blocks.len(), 5);
        assert_eq!(cfg.conditional_edges().count(), 4);
    }

    #[test]
    fn if_without_else_still_has_two_edges() {
        let cfg = control_flow_graph(&op_block("{ if (a > 0) { self.x = 1; } }"));
        assert_eq!(cfg.blocks.len(), 2);
        let edges: Vec<_> = cfg.conditional_edges().collect();
        assert_eq!(edges.len(), 2);
        assert_eq!(edges[1].to, None);
    }

    #[test]
    fn edge_ids_unique_program_wide() {
        let p = parse(
            "module m { driver d { field x: int = 0;
                op f(a: int) { if (a > 0) { self.x = 1; } }
                op g(a: int) { switch (a) { case 1: { } } } } }",
        )
        .unwrap();
        let edges = p.all_edges();
        let mut dedup = edges.clone();
        dedup.dedup();
        assert_eq!(edges, dedup);
        assert_eq!(edges.len() as u32, p.edge_count);
    }
}
