use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;

use super::*;
use crate::ltl::LtlFormula;

/// The completion-detector specification, kept in the exact layout of its
/// published form (irregular whitespace and brace placement included).
const DETECTOR: &str = "GLOBAL {
  PARAMETERS { n = 27; }
}
MAIN {
  INPUTS { finished[n]; }
  OUTPUTS { allFinished; }
  INITIALLY {
    &&[0<=i<n](!allFinished W
               finished[i]);
    }
  ASSERT {
    G !allFinished
      -> ||[0<=i<n] G !finished[i];
    &&[0<=i<n] (allFinished ->
      X (!allFinished W
         finished[i]));}
}
";

fn bind(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn parse_detector_shape() {
    let spec = parse_tlsf(DETECTOR).unwrap();
    assert_eq!(spec.parameters, vec![("n".to_string(), 27)]);
    assert_eq!(spec.inputs.len(), 1);
    assert_eq!(spec.inputs[0].name, "finished");
    assert_eq!(spec.inputs[0].width, Some(SpecExpr::Ident("n".to_string())));
    assert_eq!(spec.outputs.len(), 1);
    assert_eq!(spec.outputs[0].name, "allFinished");
    assert_eq!(spec.outputs[0].width, None);
    assert_eq!(spec.section(SectionKind::Initially).len(), 1);
    assert_eq!(spec.section(SectionKind::Assert).len(), 2);
    assert_eq!(spec.semantics, Semantics::Mealy);
    assert!(!spec.semantics_declared);
}

#[test]
fn parse_minimal_spec() {
    let spec =
        parse_tlsf("MAIN { INPUTS { a; } OUTPUTS { b; } GUARANTEE { G (a -> X b); } }").unwrap();
    assert!(spec.parameters.is_empty());
    assert_eq!(spec.section(SectionKind::Guarantee).len(), 1);
}

#[test]
fn parse_reports_position_and_expectations() {
    // Unbalanced braces: MAIN block never closes.
    let err = parse_tlsf("MAIN { INPUTS { a; } OUTPUTS { b; }").unwrap_err();
    assert_eq!(err.line, 1);
    let text = format!("{err}");
    assert!(
        text.starts_with("1:"),
        "error should carry line:col, got `{text}`"
    );
    assert!(text.contains("expected"), "got `{text}`");
    assert!(text.contains("found"), "got `{text}`");

    let err = parse_tlsf("MAIN { INPUTS { a; } OUTPUTS { b; } GUARANTEE { undeclared; } }")
        .unwrap_err();
    assert!(format!("{err}").contains("undeclared"));
}

#[test]
fn parse_rejects_duplicate_sections() {
    let err =
        parse_tlsf("MAIN { INPUTS { a; } OUTPUTS { b; } ASSERT { a; } ASSERT { b; } }")
            .unwrap_err();
    assert!(format!("{err}").to_lowercase().contains("assert"));
}

#[test]
fn semantics_declarations() {
    for (decl, want) in [
        ("Mealy", Semantics::Mealy),
        ("Moore", Semantics::Moore),
        ("Mealy,Strict", Semantics::MealyStrict),
        ("Moore,Strict", Semantics::MooreStrict),
    ] {
        let text = format!(
            "INFO {{ SEMANTICS: {decl}; }} MAIN {{ INPUTS {{ a; }} OUTPUTS {{ b; }} }}"
        );
        let spec = parse_tlsf(&text).unwrap();
        assert_eq!(spec.semantics, want);
        assert!(spec.semantics_declared);
    }
}

#[test]
fn instantiate_detector_defaults() {
    let spec = parse_tlsf(DETECTOR).unwrap();
    let ground = instantiate(&spec, &BTreeMap::new()).unwrap();
    assert_eq!(ground.inputs.len(), 27);
    assert_eq!(ground.inputs[0], "finished_0");
    assert_eq!(ground.inputs[26], "finished_26");
    assert_eq!(ground.outputs, vec!["allFinished".to_string()]);

    // First ASSERT expression: G !allFinished -> 27-way disjunction.
    let first = &ground.section(SectionKind::Assert)[0];
    let LtlFormula::Implies(_, rhs) = first else {
        panic!("expected implication, got {first}");
    };
    let mut disjuncts = 1;
    let mut cursor: &LtlFormula = rhs;
    while let LtlFormula::Or(a, _) = cursor {
        disjuncts += 1;
        cursor = a;
    }
    assert_eq!(disjuncts, 27);
}

#[test]
fn instantiate_detector_n2_hand_check() {
    let spec = parse_tlsf(DETECTOR).unwrap();
    let ground = instantiate(&spec, &bind(&[("n", 2)])).unwrap();
    assert_eq!(ground.inputs, vec!["finished_0".to_string(), "finished_1".to_string()]);

    let af = || LtlFormula::atom("allFinished");
    let fin = |i: usize| LtlFormula::atom(format!("finished_{i}"));
    let w = |i: usize| LtlFormula::weak_until(LtlFormula::not(af()), fin(i));

    assert_eq!(
        ground.section(SectionKind::Initially),
        &[LtlFormula::and(w(0), w(1))]
    );
    let expected_a1 = LtlFormula::implies(
        LtlFormula::globally(LtlFormula::not(af())),
        LtlFormula::or(
            LtlFormula::globally(LtlFormula::not(fin(0))),
            LtlFormula::globally(LtlFormula::not(fin(1))),
        ),
    );
    let step = |i: usize| {
        LtlFormula::implies(af(), LtlFormula::next(w(i)))
    };
    let expected_a2 = LtlFormula::and(step(0), step(1));
    assert_eq!(
        ground.section(SectionKind::Assert),
        &[expected_a1, expected_a2]
    );
}

#[test]
fn instantiate_ranges_and_indices() {
    let spec = parse_tlsf(
        "MAIN { INPUTS { p[5]; } OUTPUTS { q; } GUARANTEE { &&[0<=i<2] p[i]; ||[0<=i<0] p[i]; } }",
    )
    .unwrap();
    let ground = instantiate(&spec, &BTreeMap::new()).unwrap();
    assert_eq!(
        ground.section(SectionKind::Guarantee),
        &[
            LtlFormula::and(LtlFormula::atom("p_0"), LtlFormula::atom("p_1")),
            LtlFormula::False,
        ]
    );
}

#[test]
fn instantiate_expansion_is_ground() {
    // No parameter references, ranges, or calls survive instantiation —
    // every produced formula draws atoms from the ground signal set only.
    let spec = parse_tlsf(DETECTOR).unwrap();
    for n in [1, 2, 5] {
        let ground = instantiate(&spec, &bind(&[("n", n)])).unwrap();
        let declared: alloc::collections::BTreeSet<String> = ground
            .inputs
            .iter()
            .chain(ground.outputs.iter())
            .cloned()
            .collect();
        for exprs in ground.sections.values() {
            for f in exprs {
                assert!(f.atoms().is_subset(&declared));
            }
        }
        assert_eq!(ground.inputs.len(), n as usize);
    }
}

#[test]
fn instantiate_errors() {
    let spec = parse_tlsf("MAIN { INPUTS { p[3]; } OUTPUTS { q; } GUARANTEE { p[3]; } }").unwrap();
    assert_eq!(
        instantiate(&spec, &BTreeMap::new()),
        Err(InstantiateError::IndexOutOfRange {
            signal: "p".to_string(),
            index: 3,
            width: 3
        })
    );

    let spec = parse_tlsf(
        "GLOBAL { DEFINITIONS { d(x) = d(x); } } MAIN { INPUTS { a; } OUTPUTS { b; } GUARANTEE { d(a); } }",
    )
    .unwrap();
    assert_eq!(
        instantiate(&spec, &BTreeMap::new()),
        Err(InstantiateError::NonTerminatingDefinition("d".to_string()))
    );

    let spec = parse_tlsf(
        "GLOBAL { PARAMETERS { n = 2; } } MAIN { INPUTS { p[n]; } OUTPUTS { q; } }",
    )
    .unwrap();
    assert_eq!(
        instantiate(&spec, &bind(&[("n", -1)])),
        Err(InstantiateError::NegativeParameter("n".to_string(), -1))
    );
}

#[test]
fn definitions_expand_with_arguments() {
    let spec = parse_tlsf(
        "GLOBAL { PARAMETERS { n = 2; } DEFINITIONS { mutual(x, y) = G (x -> !y); } }
         MAIN { INPUTS { p[n]; } OUTPUTS { q; } GUARANTEE { mutual(p[0], q); } }",
    )
    .unwrap();
    let ground = instantiate(&spec, &BTreeMap::new()).unwrap();
    assert_eq!(
        ground.section(SectionKind::Guarantee),
        &[LtlFormula::globally(LtlFormula::implies(
            LtlFormula::atom("p_0"),
            LtlFormula::not(LtlFormula::atom("q"))
        ))]
    );
}

fn ground_with(sections: &[(SectionKind, &str)], semantics: Semantics) -> GroundSpec {
    let mut map = BTreeMap::new();
    for (kind, atom) in sections {
        map.insert(*kind, vec![LtlFormula::atom(*atom)]);
    }
    GroundSpec {
        inputs: vec!["i".to_string(), "r".to_string(), "u".to_string()],
        outputs: vec![
            "p".to_string(),
            "s".to_string(),
            "g".to_string(),
        ],
        sections: map,
        semantics,
    }
}

#[test]
fn expand_semantics_guarantee_only_raw_form() {
    let ground = ground_with(&[(SectionKind::Guarantee, "g")], Semantics::Mealy);
    let problem = expand_semantics(&ground);
    let tt = LtlFormula::True;
    let expected = LtlFormula::implies(
        tt.clone(),
        LtlFormula::and(
            tt.clone(),
            LtlFormula::implies(
                LtlFormula::and(LtlFormula::globally(tt.clone()), tt.clone()),
                LtlFormula::and(LtlFormula::globally(tt), LtlFormula::atom("g")),
            ),
        ),
    );
    assert_eq!(problem.phi, expected);
    assert!(problem.assumptions.is_empty());
    assert_eq!(problem.guarantees, vec![LtlFormula::atom("g")]);
    assert!(problem.prefix.is_trivial());
}

#[test]
fn expand_semantics_strict_weak_until_conjunct() {
    let ground = ground_with(
        &[(SectionKind::Assert, "s"), (SectionKind::Require, "r")],
        Semantics::MealyStrict,
    );
    let problem = expand_semantics(&ground);
    let w = LtlFormula::weak_until(
        LtlFormula::atom("s"),
        LtlFormula::not(LtlFormula::atom("r")),
    );
    assert_eq!(problem.prefix.strict, Some(w.clone()));
    let expected = LtlFormula::implies(
        LtlFormula::True,
        LtlFormula::and(
            LtlFormula::True,
            LtlFormula::and(
                w,
                LtlFormula::implies(
                    LtlFormula::and(
                        LtlFormula::globally(LtlFormula::atom("r")),
                        LtlFormula::True,
                    ),
                    LtlFormula::True,
                ),
            ),
        ),
    );
    assert_eq!(problem.phi, expected);
    // REQUIRE feeds the assumption bundle under strict semantics.
    assert_eq!(
        problem.assumptions,
        vec![LtlFormula::globally(LtlFormula::atom("r"))]
    );
    assert!(problem.guarantees.is_empty());
}

#[test]
fn expand_semantics_strict_omits_conjunct_without_require_assert() {
    let ground = ground_with(&[(SectionKind::Guarantee, "g")], Semantics::MooreStrict);
    let problem = expand_semantics(&ground);
    assert_eq!(problem.prefix.strict, None);
    let expected = LtlFormula::implies(
        LtlFormula::True,
        LtlFormula::and(
            LtlFormula::True,
            LtlFormula::implies(
                LtlFormula::and(LtlFormula::globally(LtlFormula::True), LtlFormula::True),
                LtlFormula::atom("g"),
            ),
        ),
    );
    assert_eq!(problem.phi, expected);
}

#[test]
fn expand_semantics_detector() {
    let spec = parse_tlsf(DETECTOR).unwrap();
    let ground = instantiate(&spec, &bind(&[("n", 2)])).unwrap();
    let problem = expand_semantics(&ground);
    let f_initially = ground.section(SectionKind::Initially)[0].clone();
    let f_assert = LtlFormula::and(
        ground.section(SectionKind::Assert)[0].clone(),
        ground.section(SectionKind::Assert)[1].clone(),
    );
    let tt = LtlFormula::True;
    let expected = LtlFormula::implies(
        f_initially.clone(),
        LtlFormula::and(
            tt.clone(),
            LtlFormula::implies(
                LtlFormula::and(LtlFormula::globally(tt.clone()), tt.clone()),
                LtlFormula::and(LtlFormula::globally(f_assert.clone()), tt),
            ),
        ),
    );
    assert_eq!(problem.phi, expected);
    assert_eq!(problem.guarantees, vec![LtlFormula::globally(f_assert)]);
    assert_eq!(problem.prefix.initially, f_initially);
}

#[test]
fn render_is_a_fixpoint() {
    for text in [
        DETECTOR,
        "MAIN { INPUTS { a; } OUTPUTS { b; } GUARANTEE { G (a -> X b); } }",
        "INFO { SEMANTICS: Moore,Strict; }
         GLOBAL { PARAMETERS { k = 3; } DEFINITIONS { d(x) = F x; } }
         MAIN { INPUTS { p[k]; } OUTPUTS { q; } REQUIRE { d(q); } ASSERT { ||[0<=i<k] p[i]; } }",
    ] {
        let first = parse_tlsf(text).unwrap();
        let rendered = render_tlsf(&first);
        let second = parse_tlsf(&rendered).unwrap_or_else(|e| {
            panic!("rendered text must reparse, got {e}:\n{rendered}")
        });
        assert_eq!(
            { let mut s = second.clone(); s.semantics_declared = first.semantics_declared; s },
            first,
            "parse(render(x)) differs for:\n{rendered}"
        );
        assert_eq!(render_tlsf(&second), rendered, "render not stable");
    }
}

#[test]
fn render_preserves_ranged_syntax() {
    let spec = parse_tlsf(DETECTOR).unwrap();
    let rendered = render_tlsf(&spec);
    assert!(rendered.contains("&&[0 <= i < n]"), "{rendered}");
    assert!(rendered.contains("||[0 <= i < n]"), "{rendered}");
}

#[test]
fn strip_removes_comments_but_not_meaning() {
    let commented = "// completion detector
GLOBAL {
  PARAMETERS { n = 27; } /* client
count */
}
MAIN {
  INPUTS { finished[n]; }
  OUTPUTS { allFinished; } // single bit
  INITIALLY {
    &&[0<=i<n](!allFinished W
               finished[i]);
    }
  ASSERT {
    G !allFinished
      -> ||[0<=i<n] G !finished[i];
    &&[0<=i<n] (allFinished ->
      X (!allFinished W
         finished[i]));}
}
";
    let stripped = strip_metadata(commented);
    assert!(!stripped.contains("//"));
    assert!(!stripped.contains("/*"));
    assert_eq!(parse_tlsf(&stripped).unwrap(), parse_tlsf(DETECTOR).unwrap());
}

#[test]
fn strip_identity_without_comments() {
    assert_eq!(strip_metadata(DETECTOR), DETECTOR);
}

#[test]
fn strip_only_comments_yields_empty() {
    assert_eq!(strip_metadata("// nothing here\n/* at all */\n"), "");
}

#[test]
fn strip_removes_info_free_text() {
    let text = "INFO {
  TITLE: \"Completion Detector\";
  DESCRIPTION: \"counts clients\";
  SEMANTICS: Moore;
}
MAIN { INPUTS { a; } OUTPUTS { b; } }
";
    let stripped = strip_metadata(text);
    assert!(!stripped.contains("TITLE"));
    assert!(!stripped.contains("Detector"));
    assert!(stripped.contains("SEMANTICS: Moore;"));
    let spec = parse_tlsf(&stripped).unwrap();
    assert_eq!(spec.semantics, Semantics::Moore);
}
