use linalign::prefeval::{evaluate, load_dataset, DecoderResponder, EvalSettings, Responder};
use serde_json::json;

use crate::args::EvalArgs;
use crate::backend::{describe, load_scripted, open_model, BackendSpec};
use crate::exit::{to_json, write_file, CmdResult, Failure};
use crate::manifest::RunManifest;

pub fn run(args: &EvalArgs, argv: &[String]) -> CmdResult {
    let items = load_dataset(&args.dataset)?;
    let align = args.align.config();
    let sampling = args.sampling.config();
    align.validate()?;
    sampling.validate()?;
    let settings = EvalSettings {
        mode: args.mode.into(),
        seed: args.sampling.seed,
        system_prompt: args.system_prompt.clone(),
        shuffle_options: args.shuffle_options,
        abort_on_error: args.abort_on_error,
    };

    let model = match &args.backend {
        BackendSpec::Scripted(_) => None,
        spec => Some(open_model(spec)?),
    };
    let scripted;
    let decoding;
    let responder: &dyn Responder = match (&args.backend, &model) {
        (BackendSpec::Scripted(path), _) => {
            scripted = load_scripted(path)?;
            &scripted
        }
        (_, Some(m)) => {
            decoding = DecoderResponder::new(m.as_ref(), align, sampling.clone())?;
            &decoding
        }
        (_, None) => unreachable!("non-scripted backends are opened above"),
    };
    let backend = describe(&args.backend, model.as_deref());
    let label = args
        .label
        .clone()
        .or_else(|| backend.model_id.clone())
        .unwrap_or_else(|| "scripted".to_string());

    let outcome = evaluate(responder, &items, &settings)?;
    let table = outcome.report.render_table(&label);
    print!("{table}");

    if let Some(dir) = &args.out {
        let config = json!({
            "dataset": args.dataset,
            "settings": settings,
            "align": align,
            "sampling": sampling,
            "label": label,
        });
        write_file(&dir.join("report.txt"), &table)?;
        write_file(&dir.join("report.json"), &to_json(&outcome))?;
        RunManifest::new("eval", argv, config, settings.seed, &backend).write(&dir.join("manifest.json"))?;
    }
    if outcome.report.failed > 0 {
        return Err(Failure::Check(format!(
            "{} of {} items failed to generate",
            outcome.report.failed,
            outcome.report.total()
        )));
    }
    Ok(())
}
