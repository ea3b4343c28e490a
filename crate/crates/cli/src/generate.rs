use std::path::Path;

use linalign::decode::{Decoder, DualForward, GenerationResult, Prompt};
use linalign::scd::{PrincipleTemplate, BUILTIN_PRINCIPLES};
use serde::Serialize;
use serde_json::json;

use crate::args::GenerateArgs;
use crate::backend::{describe, open_model};
use crate::exit::{to_json, write_file, CmdResult, Failure};
use crate::manifest::RunManifest;

fn resolve_principle(name_or_path: &str, args: &GenerateArgs) -> CmdResult<PrincipleTemplate> {
    let placement = args.placement.into();
    if let Some(builtin) = PrincipleTemplate::builtin(name_or_path) {
        return Ok(PrincipleTemplate::new(builtin.text(), placement)?);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(Failure::Config(format!(
            "principle {name_or_path:?} is neither a built-in ({}) nor a readable file",
            BUILTIN_PRINCIPLES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(PrincipleTemplate::new(text.trim_end(), placement)?)
}

#[derive(Serialize)]
struct StepDiagnostic {
    step: usize,
    token: u32,
    raw_norm: f64,
    degenerate: bool,
}

fn diagnostics(result: &GenerationResult, floor: f64, has_principle: bool) -> String {
    let mut out = String::new();
    for (step, (&token, &raw_norm)) in result.tokens.iter().zip(&result.per_step_norms).enumerate() {
        let line = StepDiagnostic {
            step,
            token,
            raw_norm,
            degenerate: !has_principle || raw_norm < floor,
        };
        out.push_str(&serde_json::to_string(&line).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn run(args: &GenerateArgs, argv: &[String]) -> CmdResult {
    let align = args.align.config();
    let sampling = args.sampling.config();
    align.validate()?;
    sampling.validate()?;
    let principle = args
        .principle
        .as_deref()
        .map(|p| resolve_principle(p, args))
        .transpose()?;
    let prompt = match (&args.prompt, &args.prompt_tokens) {
        (_, Some(ids)) => Prompt::tokens(ids.clone()),
        (Some(text), None) => Prompt::text(text.as_str()),
        (None, None) => Prompt::tokens(Vec::new()),
    };

    let model = open_model(&args.backend)?;
    let decoder = Decoder::new(model.as_ref(), align, sampling.clone())?.with_dual_forward(args.dual_forward.into());

    let config = json!({
        "prompt": prompt,
        "principle": principle,
        "align": align,
        "sampling": sampling,
        "dual_forward": DualForward::from(args.dual_forward),
    });
    let backend = describe(&args.backend, Some(model.as_ref()));
    let manifest = RunManifest::new("generate", argv, config, sampling.seed, backend);

    let result = decoder.generate(&prompt, principle.as_ref())?;

    if let Some(path) = &args.diagnostics {
        write_file(path, &diagnostics(&result, align.epsilon_floor, principle.is_some()))?;
    }
    if let Some(path) = &args.output {
        write_file(path, &to_json(&result))?;
    }
    if let Some(path) = &args.manifest {
        manifest.write(path)?;
    }
    match &result.text {
        Some(text) => println!("{text}"),
        None => println!(
            "{}",
            result.tokens.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
        ),
    }
    Ok(())
}
