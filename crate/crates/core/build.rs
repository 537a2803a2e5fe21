fn main() {
    // The `lapack` crate declares the FFI symbols but links nothing itself;
    // bind against the system reference implementation.
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=blas");
}
