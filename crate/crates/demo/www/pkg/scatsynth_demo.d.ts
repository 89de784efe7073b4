/* tslint:disable */
/* eslint-disable */

/**
 * `1/|d_l|` for `l = 0..=lmax`.
 */
export function amplification_curve(k: number, b: number, lmax: number): Float64Array;

/**
 * Builds `q` for the demo pattern on a coarse grid, solves the forward
 * problem and samples the far field on the `φ = 0` half-circle at `m`
 * angles from `θ = 0` to `θ = π`.
 *
 * Returns `Re f, Im f, Re A_q, Im A_q` (each of length `m`), followed by
 * `‖f − A_q‖` on those samples (root mean square), whether the source was
 * perturbed (0 or 1) and `max |q|`.
 */
export function far_field_cut(scale: number, k: number, b: number, m: number): Float64Array;

/**
 * `|ψ|` then `|q|` on an `n × n` grid over the square `[-1, 1]²` of the
 * `y = 0` plane, row-major with `z` descending; points outside the ball
 * are NaN. The last two entries are the smallness bound and `min |ψ|`.
 */
export function slice(scale: number, k: number, b: number, n: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly amplification_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly far_field_cut: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly slice: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
