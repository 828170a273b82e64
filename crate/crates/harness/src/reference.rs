//! Published reference prices, rows indexed like the table axes.

pub const STRIKES: [f64; 10] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0];
pub const ALPHAS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];
pub const HORIZONS: [f64; 3] = [1.0, 4.0, 8.0];

/// Table 2 models, in order.
pub const TABLE2_MODELS: [&str; 4] = ["BS", "OU", "FOU_H07", "FOU_H09"];
/// Table 3 models; all run with `γ = 1`.
pub const TABLE3_MODELS: [&str; 3] = ["OU", "FOU_H07", "FOU_H09"];
pub const TABLE3_GAMMA: f64 = 1.0;
/// Table 5 models.
pub const TABLE5_MODELS: [&str; 3] = ["FOU_I", "FOU_II", "FOU_III"];

type Block = [[f64; 10]; 5];
type TBlock = [[f64; 10]; 3];

pub const TABLE2: [Block; 4] = [
    [
        [44.47, 41.84, 39.32, 37.00, 35.03, 33.43, 32.00, 30.56, 29.20, 28.10],
        [44.37, 43.75, 43.25, 42.69, 42.16, 41.81, 41.51, 41.16, 40.80, 40.54],
        [29.95, 29.88, 29.85, 29.78, 29.69, 29.65, 29.62, 29.57, 29.51, 29.48],
        [5.31, 5.29, 5.24, 5.21, 5.20, 5.20, 5.20, 5.19, 5.19, 5.18],
        [0.08, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08],
    ],
    [
        [30.99, 29.92, 28.96, 28.09, 27.34, 26.69, 26.11, 25.59, 25.09, 24.65],
        [31.00, 29.89, 28.91, 28.05, 27.31, 26.65, 26.09, 25.58, 25.10, 24.65],
        [30.73, 29.62, 28.62, 27.76, 27.02, 26.39, 25.86, 25.36, 24.89, 24.46],
        [30.18, 29.08, 28.10, 27.24, 26.53, 25.93, 25.41, 24.92, 24.47, 24.05],
        [29.30, 28.21, 27.27, 26.45, 25.78, 25.19, 24.70, 24.25, 23.82, 23.41],
    ],
    [
        [37.01, 35.30, 33.80, 32.46, 31.32, 30.35, 29.49, 28.75, 28.06, 27.45],
        [38.08, 36.08, 34.49, 33.14, 32.00, 31.01, 30.21, 29.52, 28.85, 28.25],
        [39.09, 37.04, 35.25, 33.87, 32.73, 31.82, 31.09, 30.41, 29.76, 29.19],
        [39.85, 37.91, 36.14, 34.71, 33.63, 32.78, 32.08, 31.42, 30.80, 30.24],
        [40.81, 39.03, 37.27, 36.10, 35.08, 34.44, 33.67, 32.99, 32.40, 32.06],
    ],
    [
        [31.46, 29.50, 27.72, 26.09, 24.60, 23.25, 22.03, 20.97, 20.03, 19.21],
        [31.49, 29.33, 27.52, 25.92, 24.47, 23.14, 22.00, 20.99, 20.09, 19.29],
        [31.72, 29.57, 27.64, 26.06, 24.65, 23.43, 22.36, 21.40, 20.54, 19.78],
        [31.98, 29.98, 28.13, 26.54, 25.23, 24.09, 23.08, 22.17, 21.35, 20.63],
        [32.79, 31.03, 29.17, 27.93, 26.73, 25.89, 24.81, 23.88, 23.12, 22.67],
    ],
];

pub const TABLE3: [TBlock; 3] = [
    [
        [45.96, 41.71, 37.89, 34.49, 31.47, 28.80, 26.44, 24.37, 22.55, 20.95],
        [43.90, 41.89, 40.26, 38.88, 37.68, 36.63, 35.69, 34.85, 34.08, 33.38],
        [41.93, 41.09, 40.44, 39.89, 39.42, 38.99, 38.61, 38.27, 37.95, 37.65],
    ],
    [
        [45.15, 40.84, 36.98, 33.52, 30.45, 27.74, 25.35, 23.25, 21.41, 19.81],
        [42.06, 39.99, 38.29, 36.85, 35.59, 34.49, 33.52, 32.64, 31.86, 31.14],
        [30.04, 29.13, 28.42, 27.83, 27.31, 26.86, 26.45, 26.08, 25.73, 25.42],
    ],
    [
        [45.14, 40.80, 36.90, 33.42, 30.33, 27.60, 25.19, 23.08, 21.24, 19.62],
        [40.82, 38.67, 36.87, 35.33, 33.99, 32.81, 31.77, 30.83, 30.00, 29.24],
        [27.15, 26.09, 25.24, 24.53, 23.91, 23.36, 22.87, 22.43, 22.03, 21.66],
    ],
];

pub const TABLE5: [Block; 3] = [
    [
        [31.46, 29.50, 27.72, 26.09, 24.60, 23.25, 22.03, 20.97, 20.03, 19.21],
        [31.49, 29.33, 27.52, 25.92, 24.47, 23.14, 22.00, 20.99, 20.09, 19.29],
        [31.72, 29.57, 27.64, 26.06, 24.65, 23.43, 22.36, 21.40, 20.54, 19.78],
        [31.98, 29.98, 28.13, 26.54, 25.23, 24.09, 23.08, 22.17, 21.35, 20.63],
        [32.79, 31.03, 29.17, 27.93, 26.73, 25.89, 24.81, 23.88, 23.12, 22.67],
    ],
    [
        [43.35, 39.07, 34.91, 30.73, 26.25, 21.52, 17.31, 14.14, 11.29, 8.91],
        [43.41, 39.07, 35.22, 31.50, 27.44, 23.51, 20.62, 17.98, 15.54, 13.57],
        [43.63, 39.57, 35.78, 32.46, 29.03, 26.35, 24.04, 21.81, 19.80, 18.13],
        [43.83, 40.22, 36.82, 33.79, 31.25, 29.11, 27.22, 25.41, 23.76, 22.38],
        [44.67, 41.62, 38.48, 36.19, 34.12, 32.69, 31.07, 29.53, 28.16, 27.30],
    ],
    [
        [42.92, 38.62, 34.44, 30.24, 25.77, 21.03, 16.81, 13.63, 10.78, 8.40],
        [42.96, 38.50, 34.61, 30.88, 26.82, 22.89, 19.99, 17.34, 14.90, 12.93],
        [43.42, 39.23, 35.34, 32.02, 28.59, 25.91, 23.60, 21.36, 19.36, 17.69],
        [44.00, 40.35, 36.88, 33.82, 31.30, 29.17, 27.28, 25.48, 23.83, 22.47],
        [45.64, 42.66, 39.44, 37.29, 35.23, 33.93, 32.26, 30.69, 29.33, 28.59],
    ],
];
