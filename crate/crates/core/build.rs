fn main() {
    // System LAPACK (reference implementation shipped with the toolchain image).
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=blas");
}
