//! Worked examples: the bibliography document, the eight sample views and
//! three queries, the conference/book query with its two views, and the
//! navigation example rows.

use crate::pattern::{jp, parse_query, JoinedTreePattern, ParsedQuery};

pub const BIBLIOGRAPHY: &str = "<bibliography>\
<book><title>Found. of Databases</title><author><name><first>Serge</first><last>Abiteboul</last></name></author><year>1995</year></book>\
<paper><title>AXML project</title><author><name><first>Serge</first><last>Abiteboul</last></name></author><year>2008</year></paper>\
</bibliography>";

/// Views v1..v8 over books and papers.
pub const SAMPLE_VIEWS: [(&str, &str); 8] = [
    ("v1", "//book[ID]/title[val]"),
    ("v2", "//book[ID]/author//last[val]"),
    ("v3", "//paper[ID]/author//last[val]"),
    ("v4", "//paper[ID]/author//first[val]"),
    ("v5", "//book[title[val]]/author"),
    ("v6", "//book[title[val]]/author[val]"),
    ("v7", "//paper[author[val]]/year[val]"),
    ("v8", "//book[ID]/author$a; //paper[author$b]/year[val]; $a=$b"),
];

pub const SAMPLE_QUERIES: [(&str, &str); 3] = [
    ("q1", "//book[title[val]]/author//last[val]"),
    ("q2", "//book[author]/year[val]"),
    ("q3", "//book[title[val]]/author$a; //paper[author$b]/year[='2008']; $a=$b"),
];

/// The two catalog views and three queries of the query-latency runs.
pub const CAMERA_VIEWS: [(&str, &str); 2] = [
    ("v1", "//catalog[ID]//camera[ID]//description[ID,cont]"),
    ("v2", "//catalog[ID]//camera[ID][//description[ID]][//price[ID,val]]//specs[ID,cont]"),
];

pub const CAMERA_QUERIES: [(&str, &str); 3] = [
    ("q1", "//catalog//camera[//description[cont]][//price[val]]//specs[cont]"),
    ("q2", "//catalog//camera[//description[ID]][//price[ID]]//specs[ID]"),
    ("q3", "//catalog//camera[//description][//price]//specs//sensor_type[val]"),
];

pub fn sample_views() -> Vec<(&'static str, JoinedTreePattern)> {
    SAMPLE_VIEWS.iter().map(|(n, s)| (*n, jp(s))).collect()
}

pub fn sample_queries() -> Vec<(&'static str, JoinedTreePattern)> {
    SAMPLE_QUERIES.iter().map(|(n, s)| (*n, jp(s))).collect()
}

/// The conference/book query. Its `title` step is a child step so that the
/// book-side view (which uses `$b/title`) embeds.
pub const CONF_QUERY: &str = r#"for $p in doc("confs")//confs//SIGMOD/paper, $y1 in $p/year, $a in $p//author[email],
    $c1 in $a/affiliation//country, $b in doc("books")//book, $y2 in $b/year, $e in $b/editor,
    $t in $b/title, $c2 in $b//country
where $e='ACM' and $y1=$y2 and $c1=$c2
return <res><tval>{string($t)}</tval></res>"#;

/// Affiliation view as written in the dialect (child step).
pub const CONF_VIEW1: &str = r#"for $p in doc("confs")//confs//paper, $a in $p/affiliation
return <v1><pid>{id($p)}</pid><aid>{id($a)}</aid><acont>{$a}</acont></v1>"#;

/// Affiliation view as drawn in the pattern figure (descendant edge).
pub const CONF_VIEW1_PATTERN: &str = "//confs//paper[ID]//affiliation[ID,cont]";

pub const CONF_VIEW2: &str = r#"for $b in doc("books")//book, $c in $b//country, $e in $b/editor,
    $t in $b/title, $y1 in $b/year, $p in doc("confs")//SIGMOD/paper,
    $y2 in $p/year, $a in $p//author[email]
where $e='ACM' and $y1=$y2
return <v2><cval>{string($c)}</cval><tval>{string($t)}</tval><pid>{id($p)}</pid><aid>{id($a)}</aid></v2>"#;

pub fn conf_query() -> ParsedQuery {
    parse_query(CONF_QUERY).expect("fixture parses")
}

pub fn conf_views() -> Vec<(&'static str, JoinedTreePattern)> {
    vec![("v1", jp(CONF_VIEW1_PATTERN)), ("v2", parse_query(CONF_VIEW2).expect("fixture parses").pattern)]
}

/// A collection with one full match of the conference query plus an
/// affiliation under a second author that lacks an email.
pub const CONF_DOCS: [(&str, &str); 2] = [
    (
        "confs",
        "<confs><SIGMOD>\
<paper><year>2008</year>\
<author><email>a@x</email><affiliation><country>France</country></affiliation></author>\
<author><affiliation><country>Greece</country></affiliation></author>\
</paper>\
<paper><year>2009</year><author><email>b@x</email><affiliation><country>France</country></affiliation></author></paper>\
</SIGMOD></confs>",
    ),
    (
        "books",
        "<books>\
<book><year>2008</year><editor>ACM</editor><title>Data on the Web</title><publisher><country>France</country></publisher></book>\
<book><year>2008</year><editor>ACM</editor><title>Web Data</title><publisher><country>Greece</country></publisher></book>\
<book><year>2008</year><editor>IEEE</editor><title>Other</title><country>France</country></book>\
</books>",
    ),
];

/// Input rows of the navigation example: (book ID path, book content).
pub const NAV_INPUT: [(&[u32], &str); 3] = [
    (&[1, 1], "<book><author>author1</author></book>"),
    (&[1, 2], "<author/>"),
    (&[1, 3], "<book><author>author2</author><author>author3</author></book>"),
];
