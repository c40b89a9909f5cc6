// SPDX-License-Identifier: Apache-2.0
mod common;

use proptest::prelude::*;
use vgf_core::bench::bundled_benchmarks;
use vgf_core::hdl::{list_signals, parse_design, ParseError, ProcessKind, SemanticError, SignalKind, SourceText};

fn parse(src: &str) -> Result<vgf_core::hdl::Design, ParseError> {
    parse_design(&SourceText::new(src, "<test>"))
}

#[test]
fn lock_case_elaborates_field_by_field() {
    let (_, d, _) = common::bench("lock_case");
    assert_eq!(d.name, "lock_case");
    let sigs: Vec<_> = list_signals(&d).into_iter().map(|(i, n, w, k)| (i.0, n.to_string(), w, k)).collect();
    assert_eq!(
        sigs,
        vec![
            (0, "clk".into(), 1, SignalKind::Input),
            (1, "rst".into(), 1, SignalKind::Input),
            (2, "din".into(), 8, SignalKind::Input),
            (3, "unlocked".into(), 1, SignalKind::Output),
            (4, "state".into(), 3, SignalKind::Register),
        ]
    );
    assert_eq!(d.processes.len(), 1);
    let p = &d.processes[0];
    assert_eq!(p.kind, ProcessKind::Sequential);
    assert_eq!(p.clock().map(|t| t.signal), d.find_signal("clk"));
    let driven: Vec<_> = p.driven().into_iter().map(|s| d.signal(s).unwrap().name.clone()).collect();
    assert_eq!(driven, ["unlocked", "state"]);
    assert_eq!(d.assertions.len(), 1);
    assert_eq!(d.assertions[0].name, "unlocked");
    assert!(d.roms.is_empty());
}

#[test]
fn lock_case_lists_its_eight_bit_port() {
    let (_, d, _) = common::bench("lock_case");
    let inputs: Vec<_> = d.inputs().filter(|s| s.width == 8).map(|s| s.name.as_str()).collect();
    assert_eq!(inputs, ["din"]);
}

#[test]
fn single_wire_lists_one_entry() {
    let d = parse("module m; wire w; endmodule").unwrap();
    let l = list_signals(&d);
    assert_eq!(l.len(), 1);
    assert_eq!((l[0].1, l[0].2, l[0].3), ("w", 1, SignalKind::Wire));
}

#[test]
fn async_fifo_has_two_clock_inputs() {
    let (_, d, _) = common::bench("async_fifo");
    let clocks: std::collections::BTreeSet<_> = d
        .processes
        .iter()
        .filter_map(|p| p.clock())
        .map(|t| d.signal(t.signal).unwrap())
        .filter(|s| s.kind == SignalKind::Input)
        .map(|s| s.name.as_str())
        .collect();
    assert_eq!(clocks.into_iter().collect::<Vec<_>>(), ["rclk", "wclk"]);
}

#[test]
fn empty_text_is_a_syntax_error() {
    assert!(matches!(parse(""), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse("  // just a comment\n"), Err(ParseError::Syntax { .. })));
}

#[test]
fn syntax_errors_carry_position() {
    match parse("module m;\n  wire w\nendmodule") {
        Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected syntax error, got {other:?}"),
    }
}

#[test]
fn two_sequential_drivers_are_rejected() {
    let src = "module m(input clk, input a);
        reg r;
        always @(posedge clk) r <= a;
        always @(posedge clk) r <= ~a;
    endmodule";
    assert!(matches!(parse(src), Err(ParseError::Semantic(SemanticError::MultipleDrivers { .. }))));
}

#[test]
fn mixed_drivers_are_rejected() {
    let src = "module m(input clk, input a);
        reg r;
        assign r = a;
        always @(posedge clk) r <= a;
    endmodule";
    assert!(matches!(parse(src), Err(ParseError::Semantic(SemanticError::MultipleDrivers { .. }))));
}

#[test]
fn undeclared_signals_are_rejected() {
    let src = "module m(input a); wire w; assign w = b; endmodule";
    assert!(matches!(parse(src), Err(ParseError::Semantic(SemanticError::UndeclaredSignal { .. }))));
    let src = "module m(input a); bad: assert property (nope); endmodule";
    assert!(matches!(parse(src), Err(ParseError::Semantic(SemanticError::UndeclaredSignal { .. }))));
}

#[test]
fn assertion_must_be_one_bit() {
    let src = "module m(input [3:0] a); p: assert property (a); endmodule";
    assert!(matches!(parse(src), Err(ParseError::Semantic(SemanticError::WidthMismatch { .. }))));
}

#[test]
fn widths_above_128_are_rejected() {
    assert!(parse("module m(input [128:0] a); endmodule").is_err());
    assert!(parse("module m(input [127:0] a); endmodule").is_ok());
}

#[test]
fn hierarchy_flattens_with_dotted_names() {
    let src = "module inv(input a, output y); assign y = ~a; endmodule
        module top(input x, output z); inv u0(.a(x), .y(z)); endmodule";
    let d = parse(src).unwrap();
    assert_eq!(d.name, "top");
    assert!(d.find_signal("u0.a").is_some());
    assert!(d.find_signal("u0.y").is_some());
}

#[test]
fn bundled_assertion_counts_match_readmes() {
    for b in bundled_benchmarks() {
        let d = b.design().unwrap();
        let readme = std::fs::read_to_string(format!("{}/../../bench/{}/README.md", env!("CARGO_MANIFEST_DIR"), b.name)).unwrap();
        let line = readme.lines().find(|l| l.starts_with("Assertions:")).expect("README states assertion count");
        let n: usize = line["Assertions:".len()..].trim().parse().unwrap();
        assert_eq!(d.assertions.len(), n, "{}", b.name);
        assert!(b.design_source.lines().count() <= 200, "{} too long", b.name);
    }
}

#[test]
fn bundled_parse_is_deterministic_with_dense_ids() {
    for b in bundled_benchmarks() {
        let a = b.design().unwrap();
        assert_eq!(a, b.design().unwrap());
        for (i, s) in a.signals.iter().enumerate() {
            assert_eq!(s.id.index(), i);
            assert_eq!(s.init.width(), s.width);
        }
    }
}

fn fixture(widths: &[u32], inits: &[u128]) -> String {
    let mut s = String::from("module p(input clk);\n");
    for (i, (w, v)) in widths.iter().zip(inits).enumerate() {
        s += &format!("  reg [{}:0] r{i} = {w}'d{};\n", w - 1, v & vgf_core::bits::mask(*w));
    }
    s += "  always @(posedge clk) begin\n";
    for i in 1..widths.len() {
        s += &format!("    r{i} <= r{};\n", i - 1);
    }
    s += "  end\nendmodule\n";
    s
}

proptest! {
    #[test]
    fn generated_designs_parse_with_dense_ids(widths in prop::collection::vec(1u32..=128, 1..12), seed in any::<u128>()) {
        let inits: Vec<u128> = widths.iter().enumerate().map(|(i, _)| seed.rotate_left(i as u32 * 7)).collect();
        let src = fixture(&widths, &inits);
        let a = parse(&src).unwrap();
        prop_assert_eq!(&a, &parse(&src).unwrap());
        prop_assert_eq!(a.signals.len(), widths.len() + 1);
        for (i, s) in a.signals.iter().enumerate() {
            prop_assert_eq!(s.id.index(), i);
        }
        for (i, w) in widths.iter().enumerate() {
            let s = &a.signals[i + 1];
            prop_assert_eq!(s.width, *w);
            prop_assert_eq!(s.init.value(), inits[i] & vgf_core::bits::mask(*w));
        }
    }
}
