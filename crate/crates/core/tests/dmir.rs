mod common;

use paramfuzz::dmir::{self, flatten_attrs, print_program, DmirProgram};
use proptest::prelude::*;

fn same(a: &DmirProgram, b: &DmirProgram) -> bool {
    a.buses == b.buses
        && a.modules == b.modules
        && a.devices == b.devices
        && a.block_count == b.block_count
        && a.edge_count == b.edge_count
}

#[test]
fn corpus_round_trips() {
    for f in common::corpus() {
        let printed = print_program(&f.program);
        let again = dmir::parse(&printed).unwrap_or_else(|e| panic!("{}: {e}\n{printed}", f.name));
        assert!(same(&f.program, &again), "{}", f.name);
        assert_eq!(print_program(&again), printed, "{}", f.name);
    }
}

#[test]
fn ids_depend_only_on_the_text() {
    for f in common::corpus() {
        let again = dmir::parse(&f.source).unwrap();
        assert!(same(&f.program, &again));
        assert_eq!(f.program.hash, again.hash);
        let edges = f.program.all_edges();
        assert_eq!(edges, (0..f.program.edge_count).collect::<Vec<_>>(), "{}", f.name);
    }
}

fn int_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0i64..1000).prop_map(|v| v.to_string()),
        Just("self.x".to_string()),
        Just("a".to_string()),
        Just("param.m.level".to_string()),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "%"]), inner.clone())
                .prop_map(|(l, op, r)| format!("({l} {op} {r})")),
            inner.prop_map(|e| format!("-{e}")),
        ]
    })
}

fn bool_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (int_expr(), prop::sample::select(vec!["==", "!=", "<", "<=", ">", ">="]), int_expr())
            .prop_map(|(l, op, r)| format!("{l} {op} {r}")),
        Just("param.m.verbose".to_string()),
        Just("true".to_string()),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["&&", "||"]), inner.clone())
                .prop_map(|(l, op, r)| format!("({l}) {op} ({r})")),
            inner.prop_map(|e| format!("!({e})")),
        ]
    })
}

fn stmts() -> impl Strategy<Value = String> {
    let simple = prop_oneof![
        int_expr().prop_map(|e| format!("self.x = {e};")),
        Just("yield;".to_string()),
        int_expr().prop_map(|e| format!("let t = {e};")),
        Just("lock(self.l); unlock(self.l);".to_string()),
        Just("use(self.h);".to_string()),
    ];
    let block = proptest::collection::vec(simple, 0..4).prop_map(|v| v.join("\n"));
    block.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (bool_expr(), inner.clone(), proptest::option::of(inner.clone())).prop_map(|(c, t, e)| match e {
                Some(e) => format!("if ({c}) {{\n{t}\n}} else {{\n{e}\n}}"),
                None => format!("if ({c}) {{\n{t}\n}}"),
            }),
            (int_expr(), proptest::collection::vec(inner.clone(), 1..3), inner.clone()).prop_map(|(s, cases, d)| {
                let mut out = format!("switch ({s}) {{\n");
                for (i, c) in cases.iter().enumerate() {
                    out += &format!("case {i}: {{\n{c}\n}}\n");
                }
                out + &format!("default: {{\n{d}\n}}\n}}")
            }),
            proptest::collection::vec(inner, 1..3).prop_map(|v| v.join("\n")),
        ]
    })
}

fn program() -> impl Strategy<Value = String> {
    (stmts(), stmts()).prop_map(|(op, store)| {
        format!(
            "bus b;\nmodule m {{\n  param level: int = 1;\n  param verbose: bool = false;\n  driver d devnode {{\n    field x: int = 0;\n    field h: handle;\n    attr \"k\" rw {{ store {{\nlet a = kstrtoint(buf);\n{store}\nreturn OK;\n}} }}\n    op f(a: int) {{\n{op}\nreturn OK;\n}}\n  }}\n}}\ndevice d0: driver=d, parent=b, devnode=\"d0\";\n"
        )
    })
}

/// Nested groups; returns the source and the attribute names in text order.
fn nesting() -> impl Strategy<Value = (String, Vec<String>)> {
    #[derive(Clone, Debug)]
    enum Node {
        Attr,
        Group(Vec<Node>),
    }
    let leaf = Just(Node::Attr);
    let tree = leaf.prop_recursive(4, 24, 4, |inner| proptest::collection::vec(inner, 0..4).prop_map(Node::Group));
    proptest::collection::vec(tree, 0..5).prop_map(|top| {
        fn emit(nodes: &[Node], src: &mut String, names: &mut Vec<String>, groups: &mut usize) {
            for n in nodes {
                match n {
                    Node::Attr => {
                        let name = format!("a{}", names.len());
                        *src += &format!("attr \"{name}\" rw {{ store {{ return OK; }} }}\n");
                        names.push(name);
                    }
                    Node::Group(kids) => {
                        *groups += 1;
                        *src += &format!("group g{groups} {{\n");
                        emit(kids, src, names, groups);
                        *src += "}\n";
                    }
                }
            }
        }
        let (mut body, mut names, mut groups) = (String::new(), Vec::new(), 0);
        emit(&top, &mut body, &mut names, &mut groups);
        let src = format!("bus b;\nmodule m {{ driver d {{ field x: int = 0;\n{body}}} }}\ndevice d0: driver=d, parent=b;\n");
        (src, names)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_programs_round_trip(src in program()) {
        let p = dmir::parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
        let printed = print_program(&p);
        let again = dmir::parse(&printed).unwrap();
        prop_assert!(same(&p, &again));
        prop_assert_eq!(print_program(&again), printed);
    }

    #[test]
    fn flatten_follows_text_order((src, names) in nesting()) {
        match dmir::parse(&src) {
            Ok(p) => {
                let d = p.driver("d").unwrap();
                let got: Vec<&str> = flatten_attrs(d).iter().map(|a| a.fname.as_str()).collect();
                prop_assert_eq!(got, names.iter().map(String::as_str).collect::<Vec<_>>());
            }
            Err(e) => prop_assert!(e.message().contains("depth"), "{}", e),
        }
    }
}
