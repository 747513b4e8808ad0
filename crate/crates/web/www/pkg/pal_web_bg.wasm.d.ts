/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const mlp_angle_series: (a: number, b: number, c: number) => [number, number, number, number];
export const mlp_line_profile: (a: number, b: number, c: number) => [number, number, number, number];
export const quadratic_surface: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const quadratic_trajectory: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
