//! Minimal 32-bit LE ARM ELF fixture builder for tests.
//!
//! Layout: 52-byte ELF header, section bodies, then the section header
//! table. Emits NULL, the given executable sections, optional
//! .strtab/.symtab and .dynstr/.dynamic pairs, and .shstrtab. The layout was
//! cross-checked against readelf before the fixtures were frozen.

pub const ET_EXEC: u16 = 2;
#[allow(dead_code)]
pub const ET_DYN: u16 = 3;
#[allow(dead_code)]
pub const STT_OBJECT: u8 = 1;
pub const STT_FUNC: u8 = 2;

const SHT_PROGBITS: u32 = 1;
const SHT_SYMTAB: u32 = 2;
const SHT_STRTAB: u32 = 3;
const SHT_DYNAMIC: u32 = 6;
const SHF_ALLOC: u32 = 2;
const SHF_EXECINSTR: u32 = 4;

pub struct ElfFixture {
    pub e_type: u16,
    pub entry: u32,
    pub machine: u16,
    pub class_byte: u8,
    pub endian_byte: u8,
    /// Executable sections as (vaddr, bytes).
    pub text: Vec<(u32, Vec<u8>)>,
    /// (name, vaddr, STT kind)
    pub symbols: Vec<(&'static str, u32, u8)>,
    pub needed: Vec<&'static str>,
}

impl Default for ElfFixture {
    fn default() -> Self {
        ElfFixture {
            e_type: ET_EXEC,
            entry: 0x1000,
            machine: 40,
            class_byte: 1,
            endian_byte: 1,
            text: vec![(0x1000, words(&[0xe12fff1e]))],
            symbols: Vec::new(),
            needed: Vec::new(),
        }
    }
}

/// Little-endian concatenation of instruction words.
pub fn words(ws: &[u32]) -> Vec<u8> {
    ws.iter().flat_map(|w| w.to_le_bytes()).collect()
}

struct SectionOut {
    name_off: u32,
    sh_type: u32,
    flags: u32,
    vaddr: u32,
    body: Vec<u8>,
    link: u32,
    entsize: u32,
}

impl ElfFixture {
    pub fn build(&self) -> Vec<u8> {
        let mut shstr: Vec<u8> = vec![0];
        let mut name = |n: &str| -> u32 {
            let off = shstr.len() as u32;
            shstr.extend_from_slice(n.as_bytes());
            shstr.push(0);
            off
        };

        let mut sections: Vec<SectionOut> = vec![SectionOut {
            name_off: 0,
            sh_type: 0,
            flags: 0,
            vaddr: 0,
            body: Vec::new(),
            link: 0,
            entsize: 0,
        }];

        for (i, (vaddr, body)) in self.text.iter().enumerate() {
            let label = if i == 0 {
                ".text".to_string()
            } else {
                format!(".text{i}")
            };
            sections.push(SectionOut {
                name_off: name(&label),
                sh_type: SHT_PROGBITS,
                flags: SHF_ALLOC | SHF_EXECINSTR,
                vaddr: *vaddr,
                body: body.clone(),
                link: 0,
                entsize: 0,
            });
        }
        let text_idx = 1u16;

        if !self.symbols.is_empty() {
            let mut strtab: Vec<u8> = vec![0];
            let mut syms: Vec<u8> = vec![0; 16];
            for (sym_name, vaddr, kind) in &self.symbols {
                let off = strtab.len() as u32;
                strtab.extend_from_slice(sym_name.as_bytes());
                strtab.push(0);
                syms.extend_from_slice(&off.to_le_bytes());
                syms.extend_from_slice(&vaddr.to_le_bytes());
                syms.extend_from_slice(&0u32.to_le_bytes());
                syms.push(*kind);
                syms.push(0);
                syms.extend_from_slice(&text_idx.to_le_bytes());
            }
            let strtab_name = name(".strtab");
            let symtab_name = name(".symtab");
            sections.push(SectionOut {
                name_off: strtab_name,
                sh_type: SHT_STRTAB,
                flags: 0,
                vaddr: 0,
                body: strtab,
                link: 0,
                entsize: 0,
            });
            let strtab_idx = sections.len() as u32 - 1;
            sections.push(SectionOut {
                name_off: symtab_name,
                sh_type: SHT_SYMTAB,
                flags: 0,
                vaddr: 0,
                body: syms,
                link: strtab_idx,
                entsize: 16,
            });
        }

        if !self.needed.is_empty() {
            let mut dynstr: Vec<u8> = vec![0];
            let mut dynamic: Vec<u8> = Vec::new();
            for lib in &self.needed {
                let off = dynstr.len() as u32;
                dynstr.extend_from_slice(lib.as_bytes());
                dynstr.push(0);
                dynamic.extend_from_slice(&1i32.to_le_bytes());
                dynamic.extend_from_slice(&off.to_le_bytes());
            }
            dynamic.extend_from_slice(&[0; 8]);
            let dynstr_name = name(".dynstr");
            let dynamic_name = name(".dynamic");
            sections.push(SectionOut {
                name_off: dynstr_name,
                sh_type: SHT_STRTAB,
                flags: 0,
                vaddr: 0,
                body: dynstr,
                link: 0,
                entsize: 0,
            });
            let dynstr_idx = sections.len() as u32 - 1;
            sections.push(SectionOut {
                name_off: dynamic_name,
                sh_type: SHT_DYNAMIC,
                flags: 0,
                vaddr: 0,
                body: dynamic,
                link: dynstr_idx,
                entsize: 8,
            });
        }

        let shstr_name = name(".shstrtab");
        sections.push(SectionOut {
            name_off: shstr_name,
            sh_type: SHT_STRTAB,
            flags: 0,
            vaddr: 0,
            body: shstr,
            link: 0,
            entsize: 0,
        });
        let shstrndx = sections.len() as u16 - 1;

        let mut offsets = Vec::with_capacity(sections.len());
        let mut cursor = 52u32;
        for section in &sections {
            if section.body.is_empty() {
                offsets.push(0);
            } else {
                offsets.push(cursor);
                cursor += section.body.len() as u32;
            }
        }
        let shoff = cursor;

        let mut out = Vec::new();
        out.extend_from_slice(&[0x7f, b'E', b'L', b'F']);
        out.push(self.class_byte);
        out.push(self.endian_byte);
        out.push(1);
        out.extend_from_slice(&[0; 9]);
        out.extend_from_slice(&self.e_type.to_le_bytes());
        out.extend_from_slice(&self.machine.to_le_bytes());
        out.extend_from_slice(&1u32.to_le_bytes());
        out.extend_from_slice(&self.entry.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes()); // phoff
        out.extend_from_slice(&shoff.to_le_bytes());
        out.extend_from_slice(&0x0500_0200u32.to_le_bytes());
        out.extend_from_slice(&52u16.to_le_bytes());
        out.extend_from_slice(&32u16.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&40u16.to_le_bytes());
        out.extend_from_slice(&(sections.len() as u16).to_le_bytes());
        out.extend_from_slice(&shstrndx.to_le_bytes());
        assert_eq!(out.len(), 52);

        for section in &sections {
            out.extend_from_slice(&section.body);
        }
        for (section, offset) in sections.iter().zip(&offsets) {
            out.extend_from_slice(&section.name_off.to_le_bytes());
            out.extend_from_slice(&section.sh_type.to_le_bytes());
            out.extend_from_slice(&section.flags.to_le_bytes());
            out.extend_from_slice(&section.vaddr.to_le_bytes());
            out.extend_from_slice(&offset.to_le_bytes());
            out.extend_from_slice(&(section.body.len() as u32).to_le_bytes());
            out.extend_from_slice(&section.link.to_le_bytes());
            out.extend_from_slice(&0u32.to_le_bytes());
            out.extend_from_slice(&0u32.to_le_bytes());
            out.extend_from_slice(&section.entsize.to_le_bytes());
        }
        out
    }
}

/// The three-function fixture: `foo` returns, `bar` calls `foo`, `main`
/// calls `foo` then `bar`; entry at `main`.
#[allow(dead_code)]
pub fn three_function_fixture() -> ElfFixture {
    ElfFixture {
        entry: 0x100c,
        text: vec![(
            0x1000,
            words(&[
                0xe12fff1e, // 1000 foo:  bx lr
                0xebfffffd, // 1004 bar:  bl foo
                0xe12fff1e, // 1008       bx lr
                0xebfffffb, // 100c main: bl foo
                0xebfffffb, // 1010       bl bar
                0xe12fff1e, // 1014       bx lr
            ]),
        )],
        symbols: vec![
            ("foo", 0x1000, STT_FUNC),
            ("bar", 0x1004, STT_FUNC),
            ("main", 0x100c, STT_FUNC),
        ],
        ..ElfFixture::default()
    }
}

/// Call-chain shape used as the synthetic malware class: main -> a -> b -> c,
/// with a syscall in the leaf.
#[allow(dead_code)]
pub fn chain_fixture() -> ElfFixture {
    ElfFixture {
        entry: 0x1018,
        text: vec![(
            0x1000,
            words(&[
                0xef000000, // 1000 c:    svc #0
                0xe12fff1e, // 1004       bx lr
                0xebfffffc, // 1008 b:    bl c
                0xe12fff1e, // 100c       bx lr
                0xebfffffc, // 1010 a:    bl b
                0xe12fff1e, // 1014       bx lr
                0xebfffffc, // 1018 main: bl a
                0xe12fff1e, // 101c       bx lr
            ]),
        )],
        symbols: vec![
            ("c", 0x1000, STT_FUNC),
            ("b", 0x1008, STT_FUNC),
            ("a", 0x1010, STT_FUNC),
            ("main", 0x1018, STT_FUNC),
        ],
        ..ElfFixture::default()
    }
}

/// Call-star shape used as the synthetic benign class: main -> {a, b, c}.
#[allow(dead_code)]
pub fn star_fixture() -> ElfFixture {
    ElfFixture {
        entry: 0x1018,
        text: vec![(
            0x1000,
            words(&[
                0xe3a00000, // 1000 a:    mov r0, #0
                0xe12fff1e, // 1004       bx lr
                0xe3a00001, // 1008 b:    mov r0, #1
                0xe12fff1e, // 100c       bx lr
                0xe3a00002, // 1010 c:    mov r0, #2
                0xe12fff1e, // 1014       bx lr
                0xebfffff8, // 1018 main: bl a
                0xebfffff9, // 101c       bl b
                0xebfffffa, // 1020       bl c
                0xe12fff1e, // 1024       bx lr
            ]),
        )],
        symbols: vec![
            ("a", 0x1000, STT_FUNC),
            ("b", 0x1008, STT_FUNC),
            ("c", 0x1010, STT_FUNC),
            ("main", 0x1018, STT_FUNC),
        ],
        ..ElfFixture::default()
    }
}
