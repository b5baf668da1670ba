//! Renders the exercise prompt for one control tuple, then shows how many
//! distinct prompts the skill/interaction/error-handling grid produces.
//!
//! ```text
//! cargo run --example render_prompt -- "dictionaries" "bioinformatics"
//! ```

use std::collections::BTreeSet;

use synthcode::generation::render_prompt;
use synthcode::{ControlVariables, Inclusion, SkillLevel};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let topic = args.next().unwrap_or_else(|| "dictionaries".into());
    let profession = args.next().unwrap_or_else(|| "bioinformatics".into());

    let cv = ControlVariables::new(&topic, &profession, SkillLevel::Beginner, Inclusion::Excluded, Inclusion::Excluded)?;
    print!("{}", render_prompt(&cv));

    let mut distinct = BTreeSet::new();
    for skill in SkillLevel::ALL {
        for ui in Inclusion::ALL {
            for eh in Inclusion::ALL {
                distinct.insert(render_prompt(&ControlVariables::new(&topic, &profession, skill, ui, eh)?));
            }
        }
    }
    eprintln!("\n{} distinct prompts over the control grid", distinct.len());
    Ok(())
}
