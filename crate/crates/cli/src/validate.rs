use std::fs;
use std::path::PathBuf;

use transproj_core::conll::{parse_conll_with_info, validate_scheme, ColumnPolicy};
use transproj_core::SplitName;

use crate::CliError;

/// Prints one `file:line: problem` line per IOB2 violation.
/// Returns exit code 1 if any were found.
pub fn run(files: &[PathBuf]) -> Result<u8, CliError> {
    let mut total = 0;
    for path in files {
        if !path.is_file() {
            return Err(CliError::Config(format!("{} does not exist", path.display())));
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let (split, info) = parse_conll_with_info(&text, SplitName::Other(String::new()), ColumnPolicy::default())
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        for (sentence, lines) in split.sentences().iter().zip(&info.token_lines) {
            for violation in validate_scheme(sentence) {
                println!("{}:{}: {violation}", path.display(), lines[violation.index]);
                total += 1;
            }
        }
    }
    if total == 0 {
        println!("ok");
        Ok(0)
    } else {
        println!("{total} violation(s)");
        Ok(1)
    }
}
