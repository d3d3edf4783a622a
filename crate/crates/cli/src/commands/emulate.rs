//! `hintscan emulate`: interactive inspection of a browser build's client
//! hint behavior — what would this browser send after this `Accept-CH`?

use clap::Args;
use hintscan_core::{origin_of, receive_accept_ch, request_headers, GrantCache};
use url::Url;

use crate::output::Sheet;
use crate::{resources, CliError, Ctx};

#[derive(Debug, Args)]
#[command(about = "Print the hint headers a browser build would send after an Accept-CH")]
pub struct EmulateArgs {
    /// Browser build, e.g. `chrome-116-desktop` or the alias
    /// `firefox-desktop`.
    pub profile: String,

    /// `Accept-CH` response header value the origin served; empty for a
    /// plain first visit.
    #[arg(default_value = "")]
    pub accept_ch: String,

    /// Origin the exchange happens with.
    #[arg(long, default_value = "https://example.com")]
    pub origin: String,
}

pub fn run(ctx: &Ctx, args: EmulateArgs) -> Result<(), CliError> {
    let res = resources::load(&ctx.config)?;
    let profile = res
        .profiles
        .get(&args.profile)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let origin_url = Url::parse(&args.origin)
        .map_err(|e| CliError::Usage(format!("--origin `{}`: {e}", args.origin)))?;
    let origin = origin_of(&origin_url);

    let parsed = res.registry.parse_accept_ch(&[args.accept_ch.as_str()]);
    for token in &parsed.unrecognized {
        eprintln!("emulate: `{token}` matches no known hint; ignored");
    }

    let mut cache = GrantCache::new();
    receive_accept_ch(profile, &mut cache, &origin, &parsed);
    let headers = request_headers(profile, &cache, &origin).map_err(CliError::runtime)?;

    let mut sheet = Sheet::new(["header", "value"]);
    for (name, value) in &headers {
        sheet.row([name.as_str(), value.as_str()]);
    }
    sheet.print(ctx.format)
}
