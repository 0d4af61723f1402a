#![allow(dead_code)]

use simdcpp::layout::Space;
use simdcpp::machine::{Machine, MachineConfig};
use simdcpp::{compile_with, Compiled, Lane, Topology};

pub const NP_WORDS: u32 = 4096;
pub const CP_WORDS: u32 = 4096;

pub fn build(src: &str) -> Compiled {
    match compile_with(src, CP_WORDS, NP_WORDS) {
        Ok(c) => c,
        Err(e) => panic!("compile failed at {:?}: {e}\n{src}", e.loc()),
    }
}

pub fn config(topo: &str) -> MachineConfig {
    let mut cfg = MachineConfig::new(topo.parse::<Topology>().unwrap());
    cfg.np_words = NP_WORDS;
    cfg.cp_words = CP_WORDS;
    cfg
}

pub fn machine(c: &Compiled, topo: &str) -> Machine {
    Machine::new(c.ir.clone(), config(topo)).unwrap()
}

/// Static offset of a global; the NP part for mixed records.
pub fn global(c: &Compiled, name: &str) -> u32 {
    global_in(c, name, Space::Np).or_else(|| global_in(c, name, Space::Cp)).unwrap_or_else(|| panic!("no global `{name}`"))
}

/// Static CP offset of a global.
pub fn global_cp(c: &Compiled, name: &str) -> u32 {
    global_in(c, name, Space::Cp).unwrap_or_else(|| panic!("no CP global `{name}`"))
}

fn global_in(c: &Compiled, name: &str, space: Space) -> Option<u32> {
    c.layout
        .symbols
        .iter()
        .find(|s| !s.frame && s.name == name && s.space == space)
        .map(|s| s.offset)
}

pub fn set_np<T: Lane>(m: &mut Machine, addr: u32, per_node: &[T]) {
    for (mem, v) in m.state_mut().np_mem.iter_mut().zip(per_node) {
        v.to_words(&mut mem[addr as usize..addr as usize + T::WORDS]);
    }
}

pub fn get_np<T: Lane>(m: &Machine, addr: u32) -> Vec<T> {
    m.state()
        .np_mem
        .iter()
        .map(|mem| T::from_words(&mem[addr as usize..addr as usize + T::WORDS]))
        .collect()
}

pub fn get_cp(m: &Machine, addr: u32) -> i32 {
    m.state().cp_mem[addr as usize] as i32
}
