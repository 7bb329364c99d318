/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_gainreport_free: (a: number, b: number) => void;
export const __wbg_plan_free: (a: number, b: number) => void;
export const __wbg_pushresult_free: (a: number, b: number) => void;
export const gain_stability: (a: number, b: number, c: number, d: number) => number;
export const gainreport_accepted: (a: number) => number;
export const gainreport_eigenvalues: (a: number) => [number, number];
export const gainreport_max_real: (a: number) => number;
export const gainreport_message: (a: number) => [number, number];
export const plan: (a: number, b: number, c: number) => [number, number, number];
export const plan_com: (a: number) => [number, number];
export const plan_dcm: (a: number) => [number, number];
export const plan_foot_length: (a: number) => number;
export const plan_foot_width: (a: number) => number;
export const plan_footsteps: (a: number) => [number, number];
export const plan_times: (a: number) => [number, number];
export const plan_zmp: (a: number) => [number, number];
export const push: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const pushresult_dcm: (a: number) => [number, number];
export const pushresult_dcm_ref: (a: number) => [number, number];
export const pushresult_fall_time: (a: number) => number;
export const pushresult_fell: (a: number) => number;
export const pushresult_outside: (a: number) => number;
export const pushresult_worst_margin: (a: number) => number;
export const pushresult_zmp_cmd: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
