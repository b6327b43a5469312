/* tslint:disable */
/* eslint-disable */

/**
 * Swept values with their log10 variances (and spread, for simulations).
 */
export class Curve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly mean_log10: Float64Array;
    readonly std_log10: Float64Array;
    readonly x: Float64Array;
}

export class Fit {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    intercept: number;
    r_squared: number;
    slope: number;
}

export function fit_slope(x: Float64Array, mean_log10: Float64Array, logarithmic: boolean): Fit;

export function oracle_curve(system: string, alpha: number, probe: string, swept: string, fixed_other: number, lo_exp: number, hi_exp: number): Curve;

export function simulate_curve(system: string, alpha: number, probe: string, swept: string, fixed_other: number, lo_exp: number, hi_exp: number, horizon: number, samples: number, seed: bigint): Curve;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_curve_free: (a: number, b: number) => void;
    readonly __wbg_fit_free: (a: number, b: number) => void;
    readonly __wbg_get_fit_intercept: (a: number) => number;
    readonly __wbg_get_fit_r_squared: (a: number) => number;
    readonly __wbg_get_fit_slope: (a: number) => number;
    readonly __wbg_set_fit_intercept: (a: number, b: number) => void;
    readonly __wbg_set_fit_r_squared: (a: number, b: number) => void;
    readonly __wbg_set_fit_slope: (a: number, b: number) => void;
    readonly curve_mean_log10: (a: number) => [number, number];
    readonly curve_std_log10: (a: number) => [number, number];
    readonly curve_x: (a: number) => [number, number];
    readonly fit_slope: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly oracle_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
    readonly simulate_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number, m: bigint) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
