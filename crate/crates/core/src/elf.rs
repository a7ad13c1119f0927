//! Parser for 32-bit little-endian ARM ELF executables and shared objects.
//!
//! The parser turns raw bytes into an addressable [`BinaryImage`]: allocated
//! sections with their loaded contents, symbols from both symbol tables, and
//! the `DT_NEEDED` entries of the dynamic section. It is strict about the
//! supported target (ELF32, little-endian, ARM) and total over arbitrary
//! input: every failure is a typed [`ParseError`], never a panic.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

const ELF_MAGIC: [u8; 4] = [0x7f, b'E', b'L', b'F'];
const ELFCLASS32: u8 = 1;
const ELFDATA2LSB: u8 = 1;
const ELFDATA2MSB: u8 = 2;
const EM_ARM: u16 = 40;
const ET_EXEC: u16 = 2;
const ET_DYN: u16 = 3;

const SHT_SYMTAB: u32 = 2;
const SHT_STRTAB: u32 = 3;
const SHT_DYNAMIC: u32 = 6;
const SHT_NOBITS: u32 = 8;
const SHT_DYNSYM: u32 = 11;
const SHF_WRITE: u32 = 0x1;
const SHF_ALLOC: u32 = 0x2;
const SHF_EXECINSTR: u32 = 0x4;

const DT_NULL: i32 = 0;
const DT_NEEDED: i32 = 1;

const EHDR_SIZE: usize = 52;
const SHDR_SIZE: usize = 40;
const SYM_SIZE: usize = 16;

/// Machine architecture of a parsed image. Only 32-bit ARM is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Machine {
    Arm32,
}

/// Byte order of a parsed image. Only little-endian is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
}

/// Access flags of a section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SectionFlags {
    pub executable: bool,
    pub writable: bool,
    pub readable: bool,
}

/// An allocated section with its loaded bytes (empty for NOBITS sections).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub vaddr: u64,
    pub size: u64,
    pub flags: SectionFlags,
    pub bytes: Vec<u8>,
}

impl Section {
    pub fn contains(&self, addr: u64) -> bool {
        addr >= self.vaddr && addr < self.vaddr + self.size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Function,
    Object,
    Other,
}

/// A symbol table entry, deduplicated over the static and dynamic tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub vaddr: u64,
    pub kind: SymbolKind,
    pub size: u64,
}

/// A parsed 32-bit little-endian ARM ELF image.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryImage {
    /// Origin of the image; empty when parsed from an anonymous buffer.
    pub path: String,
    pub machine: Machine,
    pub endianness: Endianness,
    /// Zero means "no entry" (typical for shared objects).
    pub entry_point: u64,
    pub sections: Vec<Section>,
    pub symbols: Vec<Symbol>,
    /// `DT_NEEDED` names in dynamic-section order.
    pub needed_libraries: Vec<String>,
    /// True when the image carries a dynamic section.
    pub is_dynamic: bool,
}

impl BinaryImage {
    /// The executable sections of the image, in declaration order.
    pub fn executable_sections(&self) -> impl Iterator<Item = &Section> {
        self.sections.iter().filter(|s| s.flags.executable)
    }

    /// Looks up the loaded word-aligned byte range covering `addr`.
    pub fn section_containing(&self, addr: u64) -> Option<&Section> {
        self.sections.iter().find(|s| s.contains(addr))
    }

    /// True when `addr` falls inside an executable section.
    pub fn is_executable_addr(&self, addr: u64) -> bool {
        self.executable_sections().any(|s| s.contains(addr))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// Input does not start with the ELF magic.
    BadMagic,
    /// Not a 32-bit image.
    UnsupportedClass,
    /// Not an ARM image.
    UnsupportedMachine,
    /// Not little-endian.
    UnsupportedEndianness,
    /// A header or section offset points past the end of the input.
    Truncated,
    /// Structurally invalid in some other way.
    Malformed(&'static str),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::BadMagic => write!(f, "not an ELF file (bad magic)"),
            ParseError::UnsupportedClass => write!(f, "unsupported ELF class (expected 32-bit)"),
            ParseError::UnsupportedMachine => write!(f, "unsupported machine (expected ARM)"),
            ParseError::UnsupportedEndianness => {
                write!(f, "unsupported byte order (expected little-endian)")
            }
            ParseError::Truncated => write!(f, "file truncated or offset out of range"),
            ParseError::Malformed(what) => write!(f, "malformed ELF: {what}"),
        }
    }
}

impl core::error::Error for ParseError {}

/// Errors from dependency resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolveError {
    /// A `DT_NEEDED` name was not found and strict mode is on.
    MissingLibrary(String),
    /// A located library failed to parse.
    Library { name: String, source: ParseError },
}

impl fmt::Display for ResolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolveError::MissingLibrary(name) => write!(f, "missing library: {name}"),
            ResolveError::Library { name, source } => write!(f, "library {name}: {source}"),
        }
    }
}

impl core::error::Error for ResolveError {}

struct Reader<'a> {
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    fn bytes(&self, off: usize, len: usize) -> Result<&'a [u8], ParseError> {
        let end = off.checked_add(len).ok_or(ParseError::Truncated)?;
        self.data.get(off..end).ok_or(ParseError::Truncated)
    }

    fn u8(&self, off: usize) -> Result<u8, ParseError> {
        self.data.get(off).copied().ok_or(ParseError::Truncated)
    }

    fn u16(&self, off: usize) -> Result<u16, ParseError> {
        let b = self.bytes(off, 2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&self, off: usize) -> Result<u32, ParseError> {
        let b = self.bytes(off, 4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

#[derive(Debug, Clone, Copy)]
struct SectionHeader {
    name_off: u32,
    sh_type: u32,
    flags: u32,
    vaddr: u32,
    offset: u32,
    size: u32,
    link: u32,
    entsize: u32,
}

fn read_section_header(r: &Reader, off: usize) -> Result<SectionHeader, ParseError> {
    Ok(SectionHeader {
        name_off: r.u32(off)?,
        sh_type: r.u32(off + 4)?,
        flags: r.u32(off + 8)?,
        vaddr: r.u32(off + 12)?,
        offset: r.u32(off + 16)?,
        size: r.u32(off + 20)?,
        link: r.u32(off + 24)?,
        entsize: r.u32(off + 36)?,
    })
}

/// Reads a NUL-terminated string out of a string-table slice. A name offset
/// past the table yields an empty name rather than an error.
fn strtab_string(table: &[u8], off: u32) -> String {
    let off = off as usize;
    if off >= table.len() {
        return String::new();
    }
    let rest = &table[off..];
    let end = rest.iter().position(|&b| b == 0).unwrap_or(rest.len());
    String::from_utf8_lossy(&rest[..end]).into_owned()
}

/// Parses a 32-bit little-endian ARM ELF image from raw bytes.
///
/// Symbol tables and `DT_NEEDED` entries are extracted when present; their
/// absence yields empty lists. Anything other than the supported target is a
/// typed error, not a best-effort parse.
pub fn parse_executable(raw: &[u8]) -> Result<BinaryImage, ParseError> {
    let r = Reader { data: raw };

    if raw.len() < 4 || raw[..4] != ELF_MAGIC {
        return Err(ParseError::BadMagic);
    }
    if raw.len() < EHDR_SIZE {
        return Err(ParseError::Truncated);
    }
    if r.u8(4)? != ELFCLASS32 {
        return Err(ParseError::UnsupportedClass);
    }
    match r.u8(5)? {
        ELFDATA2LSB => {}
        ELFDATA2MSB => return Err(ParseError::UnsupportedEndianness),
        _ => return Err(ParseError::UnsupportedEndianness),
    }
    let e_type = r.u16(16)?;
    if e_type != ET_EXEC && e_type != ET_DYN {
        return Err(ParseError::Malformed("not an executable or shared object"));
    }
    if r.u16(18)? != EM_ARM {
        return Err(ParseError::UnsupportedMachine);
    }
    let entry = r.u32(24)? as u64;
    let shoff = r.u32(32)? as usize;
    let shentsize = r.u16(46)? as usize;
    let shnum = r.u16(48)? as usize;
    let shstrndx = r.u16(50)? as usize;

    let mut headers = Vec::with_capacity(shnum);
    if shnum > 0 {
        if shentsize != SHDR_SIZE {
            return Err(ParseError::Malformed("bad section header entry size"));
        }
        shoff
            .checked_add(shnum.checked_mul(SHDR_SIZE).ok_or(ParseError::Truncated)?)
            .filter(|end| *end <= raw.len())
            .ok_or(ParseError::Truncated)?;
        for i in 0..shnum {
            headers.push(read_section_header(&r, shoff + i * SHDR_SIZE)?);
        }
    }

    let section_body = |h: &SectionHeader| -> Result<&[u8], ParseError> {
        if h.sh_type == SHT_NOBITS {
            Ok(&[])
        } else {
            r.bytes(h.offset as usize, h.size as usize)
        }
    };

    let shstrtab: &[u8] = match headers.get(shstrndx) {
        Some(h) if shstrndx != 0 => section_body(h)?,
        _ => &[],
    };

    // Allocated sections form the in-memory image; everything else is only
    // consulted for symbols and dynamic entries.
    let mut sections = Vec::new();
    for h in &headers {
        if h.flags & SHF_ALLOC == 0 || h.sh_type == 0 {
            continue;
        }
        let body = section_body(h)?;
        if h.flags & SHF_EXECINSTR != 0 && h.size > 0 && body.is_empty() {
            return Err(ParseError::Malformed("executable section without contents"));
        }
        sections.push(Section {
            name: strtab_string(shstrtab, h.name_off),
            vaddr: h.vaddr as u64,
            size: h.size as u64,
            flags: SectionFlags {
                executable: h.flags & SHF_EXECINSTR != 0,
                writable: h.flags & SHF_WRITE != 0,
                readable: true,
            },
            bytes: body.to_vec(),
        });
    }

    // Loaded ranges must not overlap.
    let mut ranges: Vec<(u64, u64)> = sections
        .iter()
        .filter(|s| !s.bytes.is_empty())
        .map(|s| (s.vaddr, s.vaddr + s.size))
        .collect();
    ranges.sort_unstable();
    for pair in ranges.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(ParseError::Malformed("overlapping section ranges"));
        }
    }

    let exec_contains = |addr: u64| {
        sections
            .iter()
            .any(|s| s.flags.executable && s.contains(addr))
    };

    // Symbols from .symtab and .dynsym, deduplicated by (name, vaddr).
    let mut symbols = Vec::new();
    let mut seen = BTreeSet::new();
    for h in &headers {
        if h.sh_type != SHT_SYMTAB && h.sh_type != SHT_DYNSYM {
            continue;
        }
        if h.entsize as usize != SYM_SIZE {
            return Err(ParseError::Malformed("bad symbol entry size"));
        }
        let strtab = match headers.get(h.link as usize) {
            Some(sh) if sh.sh_type == SHT_STRTAB => section_body(sh)?,
            _ => return Err(ParseError::Malformed("symbol table without string table")),
        };
        let body = section_body(h)?;
        for entry in body.chunks_exact(SYM_SIZE) {
            let name_off = u32::from_le_bytes([entry[0], entry[1], entry[2], entry[3]]);
            let value = u32::from_le_bytes([entry[4], entry[5], entry[6], entry[7]]) as u64;
            let size = u32::from_le_bytes([entry[8], entry[9], entry[10], entry[11]]) as u64;
            let info = entry[12];
            let name = strtab_string(strtab, name_off);
            if name.is_empty() && value == 0 {
                continue;
            }
            // Only addresses inside the loaded image (or 0 for undefined
            // imports) are meaningful; linker markers like `_end` and
            // absolute symbols are dropped.
            if value != 0 && !sections.iter().any(|s| s.contains(value)) {
                continue;
            }
            let mut kind = match info & 0xf {
                2 => SymbolKind::Function,
                1 => SymbolKind::Object,
                _ => SymbolKind::Other,
            };
            // A function symbol must point at aligned executable code;
            // anything else (Thumb entry points, data in disguise) is kept
            // but demoted so it never seeds code traversal.
            if kind == SymbolKind::Function
                && value != 0
                && (!value.is_multiple_of(4) || !exec_contains(value))
            {
                kind = SymbolKind::Other;
            }
            if seen.insert((name.clone(), value)) {
                symbols.push(Symbol {
                    name,
                    vaddr: value,
                    kind,
                    size,
                });
            }
        }
    }

    // DT_NEEDED names from the first dynamic section.
    let mut needed = Vec::new();
    let mut is_dynamic = false;
    if let Some(h) = headers.iter().find(|h| h.sh_type == SHT_DYNAMIC) {
        is_dynamic = true;
        let strtab = match headers.get(h.link as usize) {
            Some(sh) if sh.sh_type == SHT_STRTAB => section_body(sh)?,
            _ => {
                return Err(ParseError::Malformed(
                    "dynamic section without string table",
                ))
            }
        };
        let body = section_body(h)?;
        for entry in body.chunks_exact(8) {
            let tag = i32::from_le_bytes([entry[0], entry[1], entry[2], entry[3]]);
            let val = u32::from_le_bytes([entry[4], entry[5], entry[6], entry[7]]);
            if tag == DT_NULL {
                break;
            }
            if tag == DT_NEEDED {
                needed.push(strtab_string(strtab, val));
            }
        }
    }

    if e_type == ET_EXEC && entry != 0 && !sections.is_empty() && !exec_contains(entry) {
        return Err(ParseError::Malformed(
            "entry point outside executable sections",
        ));
    }

    Ok(BinaryImage {
        path: String::new(),
        machine: Machine::Arm32,
        endianness: Endianness::Little,
        entry_point: entry,
        sections,
        symbols,
        needed_libraries: needed,
        is_dynamic,
    })
}

/// Resolves the transitive `DT_NEEDED` closure of `image`.
///
/// `fetch` maps a library name to its origin path and bytes, or `None` when
/// the name cannot be found; lookups happen in breadth-first dependency
/// order and each library is loaded at most once. With `strict` set, an
/// unfetchable name is an error; otherwise it is skipped.
pub fn resolve_dependencies_with<F>(
    image: &BinaryImage,
    mut fetch: F,
    strict: bool,
) -> Result<Vec<BinaryImage>, ResolveError>
where
    F: FnMut(&str) -> Option<(String, Vec<u8>)>,
{
    let mut queue: VecDeque<String> = VecDeque::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for name in &image.needed_libraries {
        if seen.insert(name.clone()) {
            queue.push_back(name.clone());
        }
    }

    let mut loaded = Vec::new();
    while let Some(name) = queue.pop_front() {
        match fetch(&name) {
            Some((path, bytes)) => {
                let mut lib = parse_executable(&bytes).map_err(|source| ResolveError::Library {
                    name: name.clone(),
                    source,
                })?;
                lib.path = path;
                for dep in &lib.needed_libraries {
                    if seen.insert(dep.clone()) {
                        queue.push_back(dep.clone());
                    }
                }
                loaded.push(lib);
            }
            None => {
                if strict {
                    return Err(ResolveError::MissingLibrary(name));
                }
            }
        }
    }
    Ok(loaded)
}

/// Returns a copy of `image` with every section and defined symbol shifted
/// by `delta`. Undefined symbols (vaddr 0) stay at zero. Used to place
/// shared objects whose preferred ranges collide.
pub fn rebase(image: &BinaryImage, delta: u64) -> BinaryImage {
    let mut out = image.clone();
    out.sections.iter_mut().for_each(|s| s.vaddr += delta);
    out.symbols
        .iter_mut()
        .filter(|s| s.vaddr != 0)
        .for_each(|s| s.vaddr += delta);
    if out.entry_point != 0 {
        out.entry_point += delta;
    }
    out
}
