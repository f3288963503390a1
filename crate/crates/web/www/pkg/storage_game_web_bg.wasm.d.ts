/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const cournot: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const efficiency_mix: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const investor_sweep: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __externref_table_alloc: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
