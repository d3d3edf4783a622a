//! Thin HTML extraction layer: anchors, the page title, and subresource
//! references, in document order.
//!
//! Built on an error-recovering HTML5 parser, so arbitrary junk bodies never
//! fail — they just yield fewer (or no) elements.

use scraper::{Html, Selector};

/// An `<a>` element with a non-empty `href`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    pub href: String,
    /// Text content with whitespace collapsed.
    pub text: String,
}

/// A reference to a subresource the page would load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceRef {
    /// Element name: `script`, `img`, `link`, `iframe`, or `source`.
    pub element: String,
    pub url: String,
}

/// A parsed HTML document.
pub struct Document {
    inner: Html,
}

/// Parse an HTML document. Never fails; invalid markup is recovered from and
/// hopeless input simply produces an empty tree.
pub fn parse(body: &str) -> Document {
    Document {
        inner: Html::parse_document(body),
    }
}

fn selector(css: &str) -> Selector {
    Selector::parse(css).expect("static selector must parse")
}

impl Document {
    /// All anchors with an `href` attribute, in document order.
    pub fn anchors(&self) -> Vec<Anchor> {
        let sel = selector("a[href]");
        self.inner
            .select(&sel)
            .filter_map(|el| {
                let href = el.value().attr("href")?.trim();
                if href.is_empty() {
                    return None;
                }
                Some(Anchor {
                    href: href.to_string(),
                    text: collapse_whitespace(el.text()),
                })
            })
            .collect()
    }

    /// The `<title>` text, whitespace-collapsed, if present and non-empty.
    pub fn title(&self) -> Option<String> {
        let sel = selector("title");
        self.inner
            .select(&sel)
            .next()
            .map(|el| collapse_whitespace(el.text()))
            .filter(|t| !t.is_empty())
    }

    /// Subresource references (`script[src]`, `img[src]`, `link[href]`,
    /// `iframe[src]`, `source[src]`), in document order.
    pub fn resource_refs(&self) -> Vec<ResourceRef> {
        let sel = selector("script[src], img[src], link[href], iframe[src], source[src]");
        self.inner
            .select(&sel)
            .filter_map(|el| {
                let name = el.value().name();
                let attr = if name == "link" { "href" } else { "src" };
                let url = el.value().attr(attr)?.trim();
                if url.is_empty() {
                    return None;
                }
                Some(ResourceRef {
                    element: name.to_string(),
                    url: url.to_string(),
                })
            })
            .collect()
    }
}

fn collapse_whitespace<'a, I: Iterator<Item = &'a str>>(parts: I) -> String {
    let joined: String = parts.collect::<Vec<_>>().join(" ");
    joined.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_in_document_order() {
        let doc = parse(
            r#"<html><body>
                <a href="/login">  Sign
                in </a>
                <p><a href="https://other.example/help">Help</a></p>
                <a name="no-href">skip me</a>
                <a href="">empty</a>
            </body></html>"#,
        );
        let anchors = doc.anchors();
        assert_eq!(anchors.len(), 2);
        assert_eq!(anchors[0].href, "/login");
        assert_eq!(anchors[0].text, "Sign in");
        assert_eq!(anchors[1].href, "https://other.example/help");
    }

    #[test]
    fn title_extraction() {
        let doc = parse("<html><head><title>  My \n  Login Page </title></head></html>");
        assert_eq!(doc.title().unwrap(), "My Login Page");
        assert_eq!(parse("<p>no title</p>").title(), None);
        assert_eq!(parse("<title> </title>").title(), None);
    }

    #[test]
    fn resource_refs_cover_all_kinds() {
        let doc = parse(
            r#"<html><head>
                <link rel="stylesheet" href="/style.css">
                <script src="https://cdn.example/lib.js"></script>
            </head><body>
                <img src="https://tracker.example/px.gif">
                <iframe src="https://embed.example/frame"></iframe>
                <video><source src="/clip.mp4"></video>
                <script>inline();</script>
            </body></html>"#,
        );
        let refs = doc.resource_refs();
        let elements: Vec<&str> = refs.iter().map(|r| r.element.as_str()).collect();
        assert_eq!(elements, ["link", "script", "img", "iframe", "source"]);
        assert_eq!(refs[2].url, "https://tracker.example/px.gif");
    }

    #[test]
    fn garbage_input_yields_empty_results() {
        let doc = parse("\u{0}\u{1}%%% not html at all >>>");
        assert!(doc.anchors().is_empty());
        assert!(doc.resource_refs().is_empty());
    }
}
