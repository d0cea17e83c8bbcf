//! A deliberately small HTTP grammar: enough to tell a request line from
//! noise and a status line from noise.

const TERMINATOR: &[u8] = b"\r\n\r\n";

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

fn first_line(bytes: &[u8]) -> Option<&str> {
    let end = find(bytes, b"\r\n")?;
    std::str::from_utf8(&bytes[..end]).ok()
}

fn is_version(v: &str) -> bool {
    v == "HTTP/1.0" || v == "HTTP/1.1"
}

/// `METHOD SP /target SP HTTP/1.x CRLF ... CRLF CRLF`
pub fn valid_http_request(bytes: &[u8]) -> bool {
    if find(bytes, TERMINATOR).is_none() {
        return false;
    }
    let Some(line) = first_line(bytes) else {
        return false;
    };
    let parts: Vec<&str> = line.split(' ').collect();
    match parts.as_slice() {
        [method, target, version] => {
            !method.is_empty()
                && method.bytes().all(|b| b.is_ascii_uppercase())
                && target.starts_with('/')
                && target.bytes().all(|b| b.is_ascii_graphic())
                && is_version(version)
        }
        _ => false,
    }
}

/// `HTTP/1.x SP DDD SP reason CRLF ... CRLF CRLF`
pub fn valid_http_response(bytes: &[u8]) -> bool {
    if find(bytes, TERMINATOR).is_none() {
        return false;
    }
    let Some(line) = first_line(bytes) else {
        return false;
    };
    let mut parts = line.splitn(3, ' ');
    let (Some(version), Some(code), Some(reason)) = (parts.next(), parts.next(), parts.next()) else {
        return false;
    };
    is_version(version)
        && code.len() == 3
        && code.bytes().all(|b| b.is_ascii_digit())
        && code.as_bytes()[0] != b'0'
        && !reason.is_empty()
}

/// The request target with any query string dropped; empty when the request
/// line cannot be split.
pub fn request_path(bytes: &[u8]) -> Vec<u8> {
    let Some(line) = first_line(bytes) else {
        return Vec::new();
    };
    let mut parts = line.split(' ');
    match (parts.next(), parts.next()) {
        (Some(_), Some(target)) => target.split('?').next().unwrap_or("").as_bytes().to_vec(),
        _ => Vec::new(),
    }
}

pub fn reason(status: i64) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        403 => "Forbidden",
        404 => "Not Found",
        500 => "Internal Server Error",
        _ => "Unknown",
    }
}

pub fn http_response(status: i64, body: &[u8]) -> Vec<u8> {
    let mut out = format!(
        "HTTP/1.1 {status} {}\r\nContent-Length: {}\r\n\r\n",
        reason(status),
        body.len()
    )
    .into_bytes();
    out.extend_from_slice(body);
    out
}

/// The status code of a well-formed response.
pub fn status_of(bytes: &[u8]) -> Option<u16> {
    if !valid_http_response(bytes) {
        return None;
    }
    first_line(bytes)?.split(' ').nth(1)?.parse().ok()
}
