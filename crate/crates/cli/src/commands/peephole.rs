use std::path::PathBuf;

use clap::Args;
use peepeval::peephole::optimize_text;

use crate::AppError;

#[derive(Args)]
pub struct PeepholeArgs {
    /// Read the block from a file instead of --text.
    #[arg(long, conflicts_with = "text")]
    pub input: Option<PathBuf>,
    /// Block text (escaped \n accepted).
    #[arg(long)]
    pub text: Option<String>,
    /// Print the applied-rule trace as JSON to stderr.
    #[arg(long)]
    pub trace: bool,
}

pub fn run(args: PeepholeArgs) -> Result<(), AppError> {
    let text = match (&args.input, &args.text) {
        (Some(path), _) => std::fs::read_to_string(path)
            .map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?,
        (None, Some(text)) => text.clone(),
        (None, None) => return Err(AppError::Input("pass --input FILE or --text BLOCK".into())),
    };
    let (optimized, trace) = optimize_text(&text).map_err(|e| AppError::Input(e.to_string()))?;
    println!("{optimized}");
    if args.trace {
        eprintln!("{}", serde_json::to_string_pretty(&trace)?);
    }
    Ok(())
}
