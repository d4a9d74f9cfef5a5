/* tslint:disable */
/* eslint-disable */

/**
 * LED-on and LED-off histograms with QCNR, min-entropy and the
 * recommended extraction ratio.
 */
export function characterize(drive_current_ma: number, mod_depth: number, n_codes: number, seed: number): string;

/**
 * Toeplitz-extracts simulated codes and reports the autocorrelation, two
 * quick tests and the first output bytes for a bitmap preview.
 */
export function extract(n_codes: number, seed: number, max_lag: number): string;

/**
 * Variance against drive current with the linear/quadratic fit.
 */
export function sweep(mod_depth: number, steps: number, n_codes: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly characterize: (a: number, b: number, c: number, d: number) => [number, number];
    readonly extract: (a: number, b: number, c: number) => [number, number];
    readonly sweep: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
