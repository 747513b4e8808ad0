/* tslint:disable */
/* eslint-disable */

/**
 * Angle in degrees between each step's direction and the gradient at the
 * new point, same batch and noise. NaN where undefined.
 */
export function mlp_angle_series(seed: number, steps: number, alpha: number): Float64Array;

/**
 * Loss along PAL's line at `step` of training the two-blob MLP with default
 * hyperparameters. Layout: `[a, b, c, s_upd]` then `[s, loss]` pairs.
 */
export function mlp_line_profile(seed: number, step: number, points: number): Float64Array;

/**
 * Quadratic values on an `n x n` grid over `[-half_width, half_width]²`,
 * row-major with the top row (largest y) first.
 */
export function quadratic_surface(condition_number: number, rotation_deg: number, half_width: number, n: number): Float64Array;

/**
 * PAL on a 2-D quadratic. Layout: `[x, y, f]` per iterate, starting point
 * first. Stops early when a step makes no update. `s_max <= 0` means
 * unbounded.
 */
export function quadratic_trajectory(condition_number: number, rotation_deg: number, mu: number, alpha: number, beta: number, s_max: number, steps: number, start_x: number, start_y: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly mlp_angle_series: (a: number, b: number, c: number) => [number, number, number, number];
    readonly mlp_line_profile: (a: number, b: number, c: number) => [number, number, number, number];
    readonly quadratic_surface: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly quadratic_trajectory: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
