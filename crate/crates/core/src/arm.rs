//! Control-flow classification of A32 instruction words.
//!
//! The decoder is total: every 32-bit word maps to exactly one
//! [`InstrKind`], and anything that is not a recognized control transfer is
//! `Fallthrough`. Only the A32 encoding is handled; Thumb is out of scope,
//! so `BLX <label>` (which always switches to Thumb) is classified as an
//! indirect call with an unresolved target.

/// How a decoded word affects control flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstrKind {
    /// No control transfer; execution continues at the next word.
    Fallthrough,
    /// Unconditional `B` with a resolved target.
    Branch(u64),
    /// Conditional `B` with a resolved target.
    CondBranch(u64),
    /// `BL` with a resolved target (conditional forms included).
    Call(u64),
    /// A jump whose target cannot be resolved statically.
    IndirectJump,
    /// A call whose target cannot be resolved statically.
    IndirectCall,
    /// Return to the caller (`BX lr`, `MOV pc, lr`, `POP {.., pc}`, ...).
    Return,
    /// Supervisor call; execution resumes at the next word.
    Syscall,
}

impl InstrKind {
    /// True when the instruction ends a basic block. Syscalls return to the
    /// next instruction and do not terminate a block.
    pub fn is_block_terminator(&self) -> bool {
        !matches!(self, InstrKind::Fallthrough | InstrKind::Syscall)
    }

    /// Short lowercase name used in edge-list dumps and diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            InstrKind::Fallthrough => "fallthrough",
            InstrKind::Branch(_) => "branch",
            InstrKind::CondBranch(_) => "cond_branch",
            InstrKind::Call(_) => "call",
            InstrKind::IndirectJump => "indirect_jump",
            InstrKind::IndirectCall => "indirect_call",
            InstrKind::Return => "return",
            InstrKind::Syscall => "syscall",
        }
    }
}

/// A decoded instruction word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instruction {
    pub addr: u64,
    pub word: u32,
    pub kind: InstrKind,
}

const COND_AL: u32 = 0xe;
const COND_NV: u32 = 0xf;
const REG_SP: u32 = 13;
const REG_LR: u32 = 14;
const REG_PC: u32 = 15;

/// `B`/`BL` target: pc (= addr + 8) plus the sign-extended 24-bit immediate
/// times four.
fn branch_target(word: u32, addr: u64) -> u64 {
    let imm = ((word & 0x00ff_ffff) as i32) << 8 >> 8; // sign-extend 24 bits
    addr.wrapping_add(8).wrapping_add((imm as i64 * 4) as u64)
}

/// Classifies one A32 word at `addr` (which must be 4-aligned).
pub fn decode_instruction(word: u32, addr: u64) -> Instruction {
    let kind = classify(word, addr);
    Instruction { addr, word, kind }
}

fn classify(word: u32, addr: u64) -> InstrKind {
    let cond = word >> 28;

    // B / BL / BLX immediate: bits 27:25 == 101.
    if word >> 25 & 0b111 == 0b101 {
        if cond == COND_NV {
            // BLX <label> switches to Thumb; not decodable here.
            return InstrKind::IndirectCall;
        }
        let target = branch_target(word, addr);
        if word & 1 << 24 != 0 {
            return InstrKind::Call(target);
        }
        return if cond == COND_AL {
            InstrKind::Branch(target)
        } else {
            InstrKind::CondBranch(target)
        };
    }
    if cond == COND_NV {
        // Remaining unconditional space (PLD, SRS, ...) never transfers
        // control in a way we can follow.
        return InstrKind::Fallthrough;
    }

    // BX / BLX register.
    if word & 0x0fff_fff0 == 0x012f_ff10 {
        return if word & 0xf == REG_LR {
            InstrKind::Return
        } else {
            InstrKind::IndirectJump
        };
    }
    if word & 0x0fff_fff0 == 0x012f_ff30 {
        return InstrKind::IndirectCall;
    }

    // SVC: bits 27:24 == 1111.
    if word >> 24 & 0xf == 0xf {
        return InstrKind::Syscall;
    }

    // LDM with pc in the register list: bits 27:25 == 100, L set, bit 15 set.
    if word >> 25 & 0b111 == 0b100 && word & 1 << 20 != 0 && word & 1 << 15 != 0 {
        return if word >> 16 & 0xf == REG_SP {
            InstrKind::Return // POP {.., pc}
        } else {
            InstrKind::IndirectJump
        };
    }

    // LDR pc: bits 27:26 == 01, L set, word-sized. Register-offset forms
    // with bit 4 set belong to the media space and are skipped.
    if word >> 26 & 0b11 == 0b01
        && word & 1 << 20 != 0
        && word & 1 << 22 == 0
        && word >> 12 & 0xf == REG_PC
        && !(word & 1 << 25 != 0 && word & 1 << 4 != 0)
    {
        return if word >> 16 & 0xf == REG_SP {
            InstrKind::Return // LDR pc, [sp], #n is a one-register pop
        } else {
            InstrKind::IndirectJump
        };
    }

    // Data-processing with Rd == pc: bits 27:26 == 00.
    if word >> 26 & 0b11 == 0b00 && word >> 12 & 0xf == REG_PC {
        let opcode = word >> 21 & 0xf;
        // Compare opcodes (TST/TEQ/CMP/CMN) and the S=0 miscellaneous space
        // that shares them (MSR, hints such as NOP) write no result.
        if (0b1000..=0b1011).contains(&opcode) {
            return InstrKind::Fallthrough;
        }
        // Multiplies and extra load/stores live at bits 7,4 == 1,1.
        if word & 1 << 25 == 0 && word & 1 << 7 != 0 && word & 1 << 4 != 0 {
            return InstrKind::Fallthrough;
        }
        if opcode == 0b1101 && word & 1 << 25 == 0 && word & 0xff0 == 0 && word & 0xf == REG_LR {
            return InstrKind::Return; // MOV pc, lr
        }
        return InstrKind::IndirectJump;
    }

    InstrKind::Fallthrough
}
