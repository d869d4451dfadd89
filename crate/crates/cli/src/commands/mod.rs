mod augment;
mod evaluate;
mod labels;
mod lsk;
mod tiling;

use anyhow::Result;

use crate::args::{Command, ServeArgs};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Tile(a) => tiling::tile(a),
        Command::Stitch(a) => tiling::stitch(a),
        Command::Convert(a) => labels::convert(a),
        Command::Split(a) => labels::split(a),
        Command::PseudoLabel(a) => labels::pseudo_label(a),
        Command::Augment(a) => augment::augment(a),
        Command::Anchors(a) => evaluate::anchors(a),
        Command::Eval(a) => evaluate::eval(a),
        Command::Stats(a) => evaluate::stats(a),
        Command::Lsk(a) => lsk::lsk(a),
        Command::Serve(a) => serve(a),
    }
}

fn serve(a: ServeArgs) -> Result<()> {
    let opts = adk_review::ServeOptions {
        root: a.root,
        addr: std::net::SocketAddr::new(a.host, a.port),
        ui_dir: a.ui,
        proposal_dir: a.proposals,
    };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(adk_review::serve(opts)).map_err(|e| anyhow::anyhow!(e))
}
