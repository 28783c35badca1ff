"""Minimal reader for digitally native PDFs.

Parses classic (non-object-stream) PDF files well enough to recover page
count, page sizes, and the text layer per page. Text extraction walks the
content streams: each BT/ET text object becomes one paragraph, with line
breaks on Td/TD/T* moves. Encrypted files and files whose page tree lives in
compressed object streams are rejected rather than misread.

This is a deliberately small, dependency-free stand-in for a full PDF
library; it covers text-only PDFs of the kind rule-based conversion targets.
"""

from __future__ import annotations

import base64
import re
import zlib
from dataclasses import dataclass, field

from .errors import FormatError

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"

LETTER_W, LETTER_H = 612.0, 792.0


@dataclass
class Ref:
    num: int
    gen: int

    def __hash__(self):
        return hash((self.num, self.gen))


class _Name(str):
    """A PDF /Name, distinguished from strings."""


class _Op(bytes):
    """A keyword/operator token, distinguished from literal strings."""


@dataclass
class PdfPage:
    width: float
    height: float
    text: str


@dataclass
class ParsedPdf:
    pages: list[PdfPage] = field(default_factory=list)

    @property
    def page_count(self) -> int:
        return len(self.pages)


class _Lexer:
    """Tokenizer over PDF syntax; shared by object headers and content streams."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_ws(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos:self.pos + 1]
            if c in b"%":
                nl = data.find(b"\n", self.pos)
                self.pos = n if nl < 0 else nl + 1
            elif c in _WHITESPACE:
                self.pos += 1
            else:
                return

    def peek(self, k: int = 1) -> bytes:
        return self.data[self.pos:self.pos + k]

    def read_token(self):
        """Return the next token: value types, b'[' b']' markers, or operator bytes."""
        self.skip_ws()
        if self.pos >= len(self.data):
            return None
        c = self.peek()
        if c == b"<":
            if self.peek(2) == b"<<":
                return self.read_dict()
            return self.read_hex_string()
        if c == b"(":
            return self.read_literal_string()
        if c == b"/":
            return self.read_name()
        if c == b"[":
            self.pos += 1
            return _Op(b"[")
        if c == b"]":
            self.pos += 1
            return _Op(b"]")
        if c in b"+-." or c.isdigit():
            return self.read_number_or_ref()
        # keyword / operator
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos:self.pos + 1] not in _WHITESPACE + _DELIMITERS:
            self.pos += 1
        word = data[start:self.pos]
        if word == b"true":
            return True
        if word == b"false":
            return False
        if word == b"null":
            return None
        if not word:  # lone delimiter such as { } — consume one byte to make progress
            self.pos += 1
            return _Op(data[start:start + 1])
        return _Op(word)

    def read_value(self):
        token = self.read_token()
        if isinstance(token, _Op) and token == b"[":
            return self.read_array_items()
        return token

    def read_array_items(self) -> list:
        items = []
        while True:
            self.skip_ws()
            if self.peek() == b"]":
                self.pos += 1
                return items
            if self.pos >= len(self.data):
                raise FormatError("unterminated PDF array")
            items.append(self.read_value())

    def read_dict(self) -> dict:
        self.pos += 2  # <<
        result: dict = {}
        while True:
            self.skip_ws()
            if self.peek(2) == b">>":
                self.pos += 2
                return result
            if self.pos >= len(self.data):
                raise FormatError("unterminated PDF dictionary")
            key = self.read_value()
            if not isinstance(key, _Name):
                raise FormatError("PDF dictionary key is not a name")
            result[str(key)] = self.read_value()

    def read_name(self) -> _Name:
        self.pos += 1  # /
        data, n = self.data, len(self.data)
        out = bytearray()
        while self.pos < n:
            c = data[self.pos:self.pos + 1]
            if c in _WHITESPACE + _DELIMITERS:
                break
            if c == b"#" and self.pos + 2 < n:
                try:
                    out.append(int(data[self.pos + 1:self.pos + 3], 16))
                    self.pos += 3
                    continue
                except ValueError:
                    pass
            out += c
            self.pos += 1
        return _Name(out.decode("latin-1"))

    def read_number_or_ref(self):
        data, n = self.data, len(self.data)
        start = self.pos
        while self.pos < n and data[self.pos:self.pos + 1] in b"+-.0123456789":
            self.pos += 1
        text = data[start:self.pos].decode("latin-1")
        try:
            value: float | int = int(text)
        except ValueError:
            try:
                value = float(text)
            except ValueError:
                raise FormatError(f"bad PDF number {text!r}") from None
        # look ahead for "G R" making this an indirect reference
        if isinstance(value, int) and value >= 0:
            save = self.pos
            self.skip_ws()
            m = re.match(rb"(\d+)\s+R(?![A-Za-z])", data[self.pos:self.pos + 24])
            if m:
                self.pos += m.end()
                return Ref(value, int(m.group(1)))
            self.pos = save
        return value

    def read_literal_string(self) -> bytes:
        self.pos += 1  # (
        data, n = self.data, len(self.data)
        depth = 1
        out = bytearray()
        while self.pos < n:
            c = data[self.pos]
            self.pos += 1
            if c == 0x5C:  # backslash
                if self.pos >= n:
                    break
                e = data[self.pos]
                self.pos += 1
                simple = {0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12,
                          0x28: 0x28, 0x29: 0x29, 0x5C: 0x5C}
                if e in simple:
                    out.append(simple[e])
                elif 0x30 <= e <= 0x37:  # octal escape, up to 3 digits
                    digits = chr(e)
                    while len(digits) < 3 and self.pos < n and 0x30 <= data[self.pos] <= 0x37:
                        digits += chr(data[self.pos])
                        self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                elif e in (10, 13):  # line continuation
                    if e == 13 and self.pos < n and data[self.pos] == 10:
                        self.pos += 1
                else:
                    out.append(e)
            elif c == 0x28:
                depth += 1
                out.append(c)
            elif c == 0x29:
                depth -= 1
                if depth == 0:
                    return bytes(out)
                out.append(c)
            else:
                out.append(c)
        raise FormatError("unterminated PDF string")

    def read_hex_string(self) -> bytes:
        self.pos += 1  # <
        end = self.data.find(b">", self.pos)
        if end < 0:
            raise FormatError("unterminated PDF hex string")
        digits = re.sub(rb"[^0-9A-Fa-f]", b"", self.data[self.pos:end])
        self.pos = end + 1
        if len(digits) % 2:
            digits += b"0"
        return bytes.fromhex(digits.decode("ascii"))


_OBJ_RE = re.compile(rb"(\d+)\s+(\d+)\s+obj\b")
_STREAM_RE = re.compile(rb"stream(\r\n|\n|\r)")


def _scan_objects(data: bytes) -> dict[Ref, tuple[object, bytes | None]]:
    objects: dict[Ref, tuple[object, bytes | None]] = {}
    pos = 0
    while True:
        m = _OBJ_RE.search(data, pos)
        if not m:
            break
        lexer = _Lexer(data, m.end())
        try:
            value = lexer.read_value()
        except FormatError:
            pos = m.end()
            continue
        stream: bytes | None = None
        lexer.skip_ws()
        if data.startswith(b"stream", lexer.pos):
            sm = _STREAM_RE.match(data, lexer.pos)
            start = sm.end() if sm else lexer.pos + len(b"stream")
            length = value.get("Length") if isinstance(value, dict) else None
            if isinstance(length, int):
                stream = data[start:start + length]
                end = data.find(b"endstream", start + length)
            else:
                end = data.find(b"endstream", start)
                stream = data[start:end if end >= 0 else len(data)].rstrip(b"\r\n")
            pos = (end + len(b"endstream")) if end >= 0 else len(data)
        else:
            pos = lexer.pos
        objects[Ref(int(m.group(1)), int(m.group(2)))] = (value, stream)
    return objects


def _decode_stream(header: dict, raw: bytes) -> bytes:
    filters = header.get("Filter")
    if filters is None:
        return raw
    if not isinstance(filters, list):
        filters = [filters]
    data = raw
    for f in filters:
        name = str(f)
        try:
            if name == "FlateDecode":
                data = zlib.decompress(data)
            elif name == "ASCII85Decode":
                data = base64.a85decode(data.strip(), adobe=data.strip().endswith(b"~>"))
            elif name == "ASCIIHexDecode":
                digits = re.sub(rb"[^0-9A-Fa-f]", b"", data.split(b">")[0])
                if len(digits) % 2:
                    digits += b"0"
                data = bytes.fromhex(digits.decode("ascii"))
            else:
                return b""  # unsupported filter: treat as no extractable text
        except Exception:
            return b""
    return data


def _extract_text(content: bytes) -> str:
    """Render a content stream's text operators into paragraphs."""
    lexer = _Lexer(content)
    paragraphs: list[str] = []
    lines: list[str] = []
    current = ""
    in_text = False

    def break_line():
        nonlocal current
        if current.strip():
            lines.append(current.strip())
        current = ""

    def flush_block():
        nonlocal lines
        break_line()
        if lines:
            paragraphs.append("\n".join(lines))
        lines = []

    stack: list = []  # operand stack
    while True:
        try:
            token = lexer.read_token()
        except FormatError:
            break
        if token is None and lexer.pos >= len(lexer.data):
            break
        if isinstance(token, _Op) and token == b"[":
            try:
                stack.append(lexer.read_array_items())
            except FormatError:
                break
            continue
        if isinstance(token, _Op) and token != b"]":
            op = bytes(token)
            if op == b"BT":
                in_text = True
                lines, current = [], ""
            elif op == b"ET":
                if in_text:
                    flush_block()
                in_text = False
            elif in_text and op == b"Tj":
                if stack and isinstance(stack[-1], bytes):
                    current += stack[-1].decode("latin-1")
            elif in_text and op == b"TJ":
                if stack and isinstance(stack[-1], list):
                    for item in stack[-1]:
                        if isinstance(item, bytes):
                            current += item.decode("latin-1")
                        elif isinstance(item, (int, float)) and item <= -180:
                            current += " "
            elif in_text and op in (b"'", b'"'):
                break_line()
                if stack and isinstance(stack[-1], bytes):
                    current += stack[-1].decode("latin-1")
            elif in_text and op in (b"Td", b"TD", b"T*"):
                if op == b"T*" or (len(stack) >= 1 and isinstance(stack[-1], (int, float))
                                   and stack[-1] != 0):
                    break_line()
            elif in_text and op == b"Tm":
                if current or lines:
                    break_line()
            stack = []
        else:
            stack.append(token)
    if in_text:
        flush_block()
    return "\n\n".join(paragraphs)


def _resolve(objects: dict, value):
    seen = 0
    while isinstance(value, Ref):
        entry = objects.get(value)
        value = entry[0] if entry else None
        seen += 1
        if seen > 32:
            return None
    return value


def parse_pdf(data: bytes) -> ParsedPdf:
    """Parse page sizes and per-page text; raises FormatError when unreadable."""
    if not data.startswith(b"%PDF-"):
        raise FormatError("not a PDF: missing %PDF header")

    objects = _scan_objects(data)
    dicts = {ref: val for ref, (val, _) in objects.items() if isinstance(val, dict)}

    trailer_pos = data.rfind(b"trailer")
    if trailer_pos >= 0:
        lexer = _Lexer(data, trailer_pos + len(b"trailer"))
        try:
            trailer = lexer.read_value()
            if isinstance(trailer, dict) and "Encrypt" in trailer:
                raise FormatError("encrypted PDFs are not supported")
        except FormatError as exc:
            if "encrypted" in str(exc):
                raise

    catalog = next((val for val in dicts.values() if val.get("Type") == "Catalog"), None)
    root = _resolve(objects, catalog.get("Pages")) if catalog else None

    page_dicts: list[tuple[dict, list | None]] = []
    if isinstance(root, dict):
        visited: set[int] = set()

        def walk(node: dict, inherited_box: list | None):
            if id(node) in visited or len(page_dicts) > 10000:
                return
            visited.add(id(node))
            box = node.get("MediaBox", inherited_box)
            if isinstance(box, Ref):
                box = _resolve(objects, box)
            kids = _resolve(objects, node.get("Kids"))
            if node.get("Type") == "Page" or (kids is None and "Contents" in node):
                page_dicts.append((node, box if isinstance(box, list) else None))
                return
            if isinstance(kids, list):
                for kid in kids:
                    kid_node = _resolve(objects, kid)
                    if isinstance(kid_node, dict):
                        walk(kid_node, box if isinstance(box, list) else None)

        walk(root, None)
    else:
        # no catalog reachable: fall back to any /Type /Page objects in file order
        page_dicts = [(val, val.get("MediaBox"))
                      for val in dicts.values() if val.get("Type") == "Page"]

    if not page_dicts:
        if b"/ObjStm" in data:
            raise FormatError("PDF uses compressed object streams, which are not supported")
        raise FormatError("no pages found in PDF")

    pages: list[PdfPage] = []
    for node, box in page_dicts:
        width, height = LETTER_W, LETTER_H
        if isinstance(box, list) and len(box) == 4:
            nums = [_resolve(objects, v) for v in box]
            if all(isinstance(v, (int, float)) for v in nums):
                width = float(abs(nums[2] - nums[0])) or LETTER_W
                height = float(abs(nums[3] - nums[1])) or LETTER_H
        contents = node.get("Contents")
        refs = contents if isinstance(contents, list) else [contents] if contents else []
        chunks = []
        for ref in refs:
            if not isinstance(ref, Ref) or ref not in objects:
                continue
            header, raw = objects[ref]
            if raw is not None and isinstance(header, dict):
                chunks.append(_decode_stream(header, raw))
        text = _extract_text(b"".join(chunks)) if chunks else ""
        pages.append(PdfPage(width=width, height=height, text=text))
    return ParsedPdf(pages=pages)
