/* tslint:disable */
/* eslint-disable */

export class GainReport {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Interleaved `re, im` of the error-system eigenvalues.
     */
    eigenvalues(): Float64Array;
    /**
     * Whether the gains satisfy the stability condition.
     */
    readonly accepted: boolean;
    readonly max_real: number;
    readonly message: string;
}

export class Plan {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    com(): Float64Array;
    /**
     * Interleaved `x, y` per sample.
     */
    dcm(): Float64Array;
    /**
     * `x, y, yaw, side` per footstep, side 0 = left, 1 = right.
     */
    footsteps(): Float64Array;
    times(): Float64Array;
    zmp(): Float64Array;
    readonly foot_length: number;
    readonly foot_width: number;
}

export class PushResult {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    dcm(): Float64Array;
    dcm_ref(): Float64Array;
    zmp_cmd(): Float64Array;
    /**
     * Fall time (s), or -1 without a fall.
     */
    readonly fall_time: number;
    readonly fell: boolean;
    /**
     * Ticks whose commanded ZMP left the support polygon.
     */
    readonly outside: number;
    /**
     * Largest signed distance of the commanded ZMP to the polygon (m).
     */
    readonly worst_margin: number;
}

/**
 * Eigenvalues of the closed-loop DCM error system for diagonal gains. The
 * matrix is built even for gains the controller would reject.
 */
export function gain_stability(kp_x: number, kp_y: number, ki_x: number, ki_y: number): GainReport;

/**
 * Plans footsteps and DCM/ZMP/CoM references for a unicycle command.
 */
export function plan(speed: number, turn_rate: number, duration: number): Plan;

/**
 * Walks 5 s on the pendulum plant and pushes the DCM by `(dx, dy)` at
 * `time`; `mpc` picks the receding-horizon controller over the
 * instantaneous law.
 */
export function push(mpc: boolean, dx: number, dy: number, time: number, speed: number): PushResult;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_gainreport_free: (a: number, b: number) => void;
    readonly __wbg_plan_free: (a: number, b: number) => void;
    readonly __wbg_pushresult_free: (a: number, b: number) => void;
    readonly gain_stability: (a: number, b: number, c: number, d: number) => number;
    readonly gainreport_accepted: (a: number) => number;
    readonly gainreport_eigenvalues: (a: number) => [number, number];
    readonly gainreport_max_real: (a: number) => number;
    readonly gainreport_message: (a: number) => [number, number];
    readonly plan: (a: number, b: number, c: number) => [number, number, number];
    readonly plan_com: (a: number) => [number, number];
    readonly plan_dcm: (a: number) => [number, number];
    readonly plan_foot_length: (a: number) => number;
    readonly plan_foot_width: (a: number) => number;
    readonly plan_footsteps: (a: number) => [number, number];
    readonly plan_times: (a: number) => [number, number];
    readonly plan_zmp: (a: number) => [number, number];
    readonly push: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly pushresult_dcm: (a: number) => [number, number];
    readonly pushresult_dcm_ref: (a: number) => [number, number];
    readonly pushresult_fall_time: (a: number) => number;
    readonly pushresult_fell: (a: number) => number;
    readonly pushresult_outside: (a: number) => number;
    readonly pushresult_worst_margin: (a: number) => number;
    readonly pushresult_zmp_cmd: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
