//! Machine state: register file, NZCV flags, sparse byte-addressed memory.

use std::collections::HashMap;

use serde::Serialize;

use crate::asm::Register;
use crate::rng::{mix, Rng};

/// Initial stack pointer: 16-byte aligned, high in the address space.
pub const INITIAL_SP: u64 = 0x7FFF_FFFF_F000;

const MEM_SALT: u64 = 0x4D45_4D46_494C_4C00;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Nzcv {
    pub n: bool,
    pub z: bool,
    pub c: bool,
    pub v: bool,
}

/// Register file, flags, and a sparse memory overlay. Reads of bytes that
/// were never written return a value derived from `hash(seed, address)`, so
/// two runs under the same seed observe identical "pre-existing" memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub x: [u64; 31],
    pub sp: u64,
    pub nzcv: Nzcv,
    pub mem: HashMap<u64, u8>,
    pub seed: u64,
}

impl MachineState {
    pub fn read_reg(&self, reg: Register) -> u64 {
        match reg {
            Register::W(n) => self.x[n as usize] & 0xFFFF_FFFF,
            Register::X(n) => self.x[n as usize],
            Register::Sp => self.sp,
            Register::Wzr | Register::Xzr => 0,
        }
    }

    /// Writes to a W register zero-extend into the X register; writes to the
    /// zero registers are discarded.
    pub fn write_reg(&mut self, reg: Register, value: u64) {
        match reg {
            Register::W(n) => self.x[n as usize] = value & 0xFFFF_FFFF,
            Register::X(n) => self.x[n as usize] = value,
            Register::Sp => self.sp = value,
            Register::Wzr | Register::Xzr => {}
        }
    }

    pub fn read_byte(&self, addr: u64) -> u8 {
        match self.mem.get(&addr) {
            Some(b) => *b,
            None => mix(self.seed ^ MEM_SALT, addr) as u8,
        }
    }

    pub fn write_byte(&mut self, addr: u64, value: u8) {
        self.mem.insert(addr, value);
    }

    pub fn read_mem(&self, addr: u64, bytes: u8) -> u64 {
        let mut value = 0u64;
        for i in 0..bytes {
            value |= (self.read_byte(addr.wrapping_add(i as u64)) as u64) << (8 * i);
        }
        value
    }

    pub fn write_mem(&mut self, addr: u64, bytes: u8, value: u64) {
        for i in 0..bytes {
            self.write_byte(addr.wrapping_add(i as u64), (value >> (8 * i)) as u8);
        }
    }

    /// Register view for witness serialization: `x0..x30`, `sp`.
    pub fn register_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (i, v) in self.x.iter().enumerate() {
            map.insert(format!("x{i}"), serde_json::json!(format!("{v:#018x}")));
        }
        map.insert("sp".into(), serde_json::json!(format!("{:#018x}", self.sp)));
        serde_json::Value::Object(map)
    }
}

/// Deterministic initial state: every general register is filled from a
/// PRNG keyed by `seed`, `sp` starts 16-byte aligned, flags clear, memory
/// empty (unmapped reads fall back to the seeded hash fill).
pub fn init_state(seed: u64) -> MachineState {
    let mut rng = Rng::new(mix(seed, 0x494E_4954));
    let mut x = [0u64; 31];
    for slot in x.iter_mut() {
        *slot = rng.next_u64();
    }
    MachineState {
        x,
        sp: INITIAL_SP,
        nzcv: Nzcv::default(),
        mem: HashMap::new(),
        seed,
    }
}

/// Synthetic symbol table: every label gets a fixed 4 KiB-aligned address
/// derived from its name, disjoint from the stack region.
pub fn symbol_address(name: &str) -> u64 {
    0x0000_1000_0000_0000 | (crate::rng::hash_str(name) & 0x0000_0FFF_FFFF_F000)
}
