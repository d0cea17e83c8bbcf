//! Scripted worlds the demos are exercised against.

use super::scenario::Scenario;
use crate::effect::World;

#[derive(Debug, Clone)]
pub struct ScriptedWorld {
    pub name: &'static str,
    pub world: World,
    pub max_iterations: usize,
}

fn get(path: &str) -> Vec<u8> {
    format!("GET {path} HTTP/1.1\r\nHost: localhost\r\n\r\n").into_bytes()
}

const INDEX: &[u8] = b"<h1>index</h1>";
const ABOUT: &[u8] = b"about this server";

fn site() -> World {
    World::new()
        .with_file("/temp/index.html", INDEX)
        .with_file("/temp/about.txt", ABOUT)
        .with_file("/etc/passwd", b"root:x:0:0")
}

fn with_requests(w: World, reqs: Vec<Vec<u8>>) -> World {
    reqs.into_iter()
        .enumerate()
        .fold(w, |w, (i, r)| w.with_connection(format!("client{i}"), r))
}

fn budget(n: usize) -> usize {
    2 * n + 4
}

fn scripted(name: &'static str, base: World, reqs: Vec<Vec<u8>>) -> ScriptedWorld {
    let n = reqs.len();
    ScriptedWorld {
        name,
        world: with_requests(base, reqs),
        max_iterations: budget(n),
    }
}

/// At least ten worlds, none with more than eight connections.
pub fn web_worlds() -> Vec<ScriptedWorld> {
    vec![
        scripted("no-requests", site(), vec![]),
        scripted("single-index", site(), vec![get("/index.html")]),
        scripted(
            "three-mixed",
            site(),
            vec![get("/index.html"), get("/missing.html"), get("/about.txt")],
        ),
        scripted("invalid-request", site(), vec![b"hello".to_vec()]),
        scripted("traversal", site(), vec![get("/../etc/passwd"), get("/index.html")]),
        scripted(
            "eight-requests",
            site(),
            vec![
                get("/index.html"),
                get("/about.txt"),
                b"garbage".to_vec(),
                get("/"),
                get("/index.html?x=1"),
                get("/nope"),
                b"POST /index.html HTTP/1.0\r\n\r\n".to_vec(),
                get("/about.txt"),
            ],
        ),
        scripted("empty-request", site(), vec![Vec::new(), get("/index.html")]),
        scripted("no-files", World::new(), vec![get("/index.html"), get("/about.txt")]),
        scripted("root-path", site(), vec![get("/")]),
        scripted("unterminated", site(), vec![b"GET /index.html HTTP/1.1\r\n".to_vec()]),
        scripted("repeat-client", site(), vec![get("/index.html"); 4]),
        ScriptedWorld {
            name: "tight-budget",
            world: with_requests(site(), vec![get("/index.html"), get("/about.txt"), get("/index.html")]),
            max_iterations: 3,
        },
    ]
}

pub fn log_worlds() -> Vec<ScriptedWorld> {
    let w = |name, world| ScriptedWorld {
        name,
        world,
        max_iterations: 1,
    };
    vec![
        w("with-input", World::new().with_file("/data/in.txt", b"log me")),
        w("empty", World::new()),
        w("empty-input", World::new().with_file("/data/in.txt", b"")),
    ]
}

pub fn zip_worlds() -> Vec<ScriptedWorld> {
    let w = |name, world| ScriptedWorld {
        name,
        world,
        max_iterations: 1,
    };
    vec![
        w(
            "two-inputs",
            World::new().with_file("/data/a.txt", b"alpha").with_file("/data/b.txt", b"beta"),
        ),
        w("one-input", World::new().with_file("/data/a.txt", b"alpha")),
        w("no-inputs", World::new()),
        w(
            "secret-nearby",
            World::new()
                .with_file("/data/a.txt", b"alpha")
                .with_file("/data/b.txt", b"beta")
                .with_file("/etc/passwd", b"root:x:0:0"),
        ),
    ]
}

/// Scenario files shipped in `scenarios/`.
pub fn example_scenarios() -> Vec<(&'static str, Scenario)> {
    vec![
        (
            "three-mixed",
            Scenario::from_parts(
                &[("/temp/index.html", INDEX), ("/temp/about.txt", ABOUT)],
                &[
                    ("alice", &get("/index.html")),
                    ("bob", &get("/missing.html")),
                    ("carol", &get("/about.txt")),
                ],
                10,
            ),
        ),
        (
            "traversal",
            Scenario::from_parts(
                &[("/temp/index.html", INDEX), ("/etc/passwd", b"root:x:0:0")],
                &[("mallory", &get("/../etc/passwd"))],
                6,
            ),
        ),
        (
            "logging",
            Scenario {
                policy: Some("logging".into()),
                ..Scenario::from_parts(&[("/data/in.txt", b"log me")], &[], 1)
            },
        ),
        (
            "zip",
            Scenario {
                policy: Some("zip".into()),
                ..Scenario::from_parts(
                    &[("/data/a.txt", b"alpha"), ("/data/b.txt", b"beta"), ("/etc/passwd", b"root:x:0:0")],
                    &[],
                    1,
                )
            },
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn web_worlds_are_within_bounds() {
        let ws = web_worlds();
        assert!(ws.len() >= 10);
        assert!(ws.iter().all(|w| w.world.pending_connections() <= 8));
    }
}
