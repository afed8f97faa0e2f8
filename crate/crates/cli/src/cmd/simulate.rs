use std::io::BufWriter;

use drumtherm_core::io::config::ALL_SECTIONS;
use drumtherm_core::io::container::{export_text, ContainerReader};
use drumtherm_core::io::{persist_temp, write_atomic, write_container};
use drumtherm_core::spectral::{run_scenario, FrameMeta};
use drumtherm_core::Result;

use super::{FRAMES, FRAMES_TEXT, MANIFEST};
use crate::{load_config, out_dir, Common};

pub fn run(common: &Common, text: bool) -> Result<()> {
    let cfg = load_config(common, None)?;
    let sc = cfg.scenario()?;
    let out = out_dir(&cfg)?;
    let meta = FrameMeta { scheme: sc.pump.scheme, n_cav: sc.pump.n_cav, t_cryo: sc.schedule.at(0.0)? };
    let run = run_scenario(sc)?;
    let grid = run.grid();
    let path = out.join(FRAMES);
    let n = write_container(&path, grid, run)?;
    write_atomic(&out.join(MANIFEST), cfg.manifest(&ALL_SECTIONS).as_bytes())?;
    if text {
        let tmp = tempfile::NamedTempFile::new_in(&out)?;
        let w = BufWriter::with_capacity(1 << 20, tmp.as_file());
        export_text(grid, ContainerReader::open(&path, meta)?, w)?;
        persist_temp(tmp, &out.join(FRAMES_TEXT))?;
    }
    println!("wrote {n} frames ({} bins, {:.3} Hz step) to {}", grid.n_bins, grid.f_step, path.display());
    Ok(())
}
