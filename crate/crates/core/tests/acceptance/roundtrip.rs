use ooheap::frontend::{parse_source, pretty_print};
use ooheap::proofviz::{from_structured, to_structured};
use ooheap::termir::{emit_text, parse_term_unchecked};
use proptest::prelude::*;

use crate::common::gen::{proof_tree, term};
use crate::common::programs::source_program;
use crate::laws::{runner, CASES};
use crate::Check;

pub fn check() -> Check {
    runner()
        .run(&term(), |t| {
            prop_assert_eq!(parse_term_unchecked(&emit_text(&t)), Ok(t));
            Ok(())
        })
        .map_err(|e| format!("term text: {e}"))?;
    runner()
        .run(&source_program(), |src| {
            let ast = parse_source(&src).map_err(|e| TestCaseError::fail(format!("generated program rejected: {e}\n{src}")))?;
            let printed = pretty_print(&ast);
            let again = parse_source(&printed).map_err(|e| TestCaseError::fail(format!("reparse: {e}\n{printed}")))?;
            prop_assert_eq!(again.without_spans(), ast.without_spans());
            Ok(())
        })
        .map_err(|e| format!("source pretty-print: {e}"))?;
    runner()
        .run(&proof_tree(), |t| {
            prop_assert_eq!(from_structured(&to_structured(&t)), Ok(t));
            Ok(())
        })
        .map_err(|e| format!("proof tree serialization: {e}"))?;
    Ok(format!("{CASES} generated terms, programs and proof trees each"))
}
