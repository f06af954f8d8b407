use ego_tree::NodeRef;
use scraper::{Html, Node};

/// Subtrees that never contribute visible text.
const DROPPED: &[&str] = &[
    "script", "style", "nav", "footer", "noscript", "template", "head", "svg", "iframe",
];

/// Inline elements; every other element separates words.
const INLINE: &[&str] = &[
    "a", "abbr", "b", "bdi", "bdo", "cite", "code", "data", "dfn", "em", "i", "kbd", "mark", "q",
    "s", "samp", "small", "span", "strong", "sub", "sup", "time", "u", "var",
];

/// Visible text of an HTML page with whitespace collapsed to single spaces.
pub fn html_to_text(html: &str) -> String {
    let document = Html::parse_document(html);
    let mut out = String::with_capacity(html.len() / 2);
    walk(document.tree.root(), &mut out);
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn walk(node: NodeRef<'_, Node>, out: &mut String) {
    match node.value() {
        Node::Text(text) => out.push_str(text),
        Node::Element(element) => {
            let name = element.name();
            if DROPPED.contains(&name) {
                return;
            }
            let block = !INLINE.contains(&name);
            if block {
                out.push(' ');
            }
            for child in node.children() {
                walk(child, out);
            }
            if block {
                out.push(' ');
            }
        }
        Node::Document | Node::Fragment => {
            for child in node.children() {
                walk(child, out);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_tags() {
        assert_eq!(html_to_text("<html><body><p>Hadza hunt.</p></body></html>"), "Hadza hunt.");
    }

    #[test]
    fn drops_boilerplate_subtrees() {
        let html = r#"<html><head><title>T</title><style>p{}</style></head>
            <body><nav>Home | About</nav><script>var x = 1;</script>
            <p>The Hadza   forage.</p><footer>(c) 2024</footer></body></html>"#;
        assert_eq!(html_to_text(html), "The Hadza forage.");
    }

    #[test]
    fn block_elements_separate_words_inline_do_not() {
        assert_eq!(html_to_text("<div>one</div><div>two</div>"), "one two");
        assert_eq!(html_to_text("<p>Tsi<b>man</b>e<br>people</p>"), "Tsimane people");
    }

    #[test]
    fn decodes_entities_and_ignores_comments() {
        assert_eq!(html_to_text("<p>A &amp; B<!-- hidden --></p>"), "A & B");
    }
}
